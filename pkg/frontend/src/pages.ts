// Form wiring for the demo pages. The bundle exposes one entry point that
// looks at data-page on <body> and binds the matching flow.

import { ApiError, AuthClient } from "./api";

const client = new AuthClient({ deadlineMs: 8000 });

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function field(id: string): string {
  return el<HTMLInputElement>(id).value.trim();
}

function show(id: string, text: string, kind: "ok" | "bad" | "info" = "info"): void {
  const node = el<HTMLElement>(id);
  node.textContent = text;
  node.className = `status ${kind}`;
}

function browserIdKey(accountId: string): string {
  return `fpkit.browser_id.${accountId}`;
}

function bindEnroll(): void {
  el<HTMLFormElement>("enroll-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    show("status", "collecting fingerprint and provisioning challenges...");
    try {
      const result = await client.enroll(field("account"), field("password"));
      localStorage.setItem(browserIdKey(result.account_id), result.browser_id);
      show(
        "status",
        `enrolled: browser ${result.browser_id}, ` +
          `${result.challenges_provisioned} challenges provisioned`,
        "ok"
      );
      el<HTMLElement>("secrets").textContent =
        `recovery code: ${result.recovery_code}\n` +
        `registration codes: ${result.registration_codes.join(", ")}\n` +
        "store these now; they are not shown again.";
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        show("status", "account already exists", "bad");
      } else {
        show("status", `enrollment failed: ${String(error)}`, "bad");
      }
    }
  });
}

function bindLogin(): void {
  el<HTMLFormElement>("login-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const account = field("account");
    const browserId = localStorage.getItem(browserIdKey(account)) ?? undefined;
    show("status", "collecting fingerprint and answering challenge...");
    try {
      const { decision } = await client.login(account, field("password"), browserId);
      if (decision.outcome === "accepted") {
        show(
          "status",
          `accepted: ${decision.match_count} attributes matched on browser ` +
            `${decision.matched_browser_id}`,
          "ok"
        );
      } else if (decision.outcome === "recovery-required") {
        show(
          "status",
          "challenges depleted or browser unrecognized: please recover",
          "bad"
        );
      } else {
        show("status", `outcome: ${decision.outcome}`, "bad");
      }
    } catch (error) {
      show("status", `login failed: ${String(error)}`, "bad");
    }
  });
}

function bindRecover(): void {
  el<HTMLFormElement>("recover-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const account = field("account");
    const browserId =
      field("browser") || localStorage.getItem(browserIdKey(account)) || "";
    show("status", "collecting replacement fingerprint...");
    try {
      await client.recover(account, field("code"), browserId);
      show("status", "recovered: fingerprint replaced and account unlocked", "ok");
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        show("status", "unknown browser id", "bad");
      } else {
        show("status", `recovery failed: ${String(error)}`, "bad");
      }
    }
  });
}

const PAGES: Record<string, () => void> = {
  enroll: bindEnroll,
  login: bindLogin,
  recover: bindRecover,
};

export function boot(): void {
  const page = document.body.dataset.page;
  if (page && PAGES[page]) {
    PAGES[page]();
  }
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
