// Error flags stored in place of a value when collection fails. The codes
// are shared with the analytics pipeline's schema and must not change.

export type FlagCode = "unsupported" | "undefined-value" | "exception" | "timeout";

export interface Flag {
  flag: FlagCode;
}

export const FLAG_CODES: readonly FlagCode[] = [
  "unsupported",
  "undefined-value",
  "exception",
  "timeout",
];

export const unsupported = (): Flag => ({ flag: "unsupported" });
export const undefinedValue = (): Flag => ({ flag: "undefined-value" });
export const exception = (): Flag => ({ flag: "exception" });
export const timeout = (): Flag => ({ flag: "timeout" });

export function isFlag(value: unknown): value is Flag {
  return (
    typeof value === "object" &&
    value !== null &&
    "flag" in value &&
    FLAG_CODES.includes((value as Flag).flag)
  );
}

// A collected attribute value on the wire: JSON scalar, sorted string array
// (set), or a flag object.
export type AttrValue = string | number | boolean | string[] | Flag;
