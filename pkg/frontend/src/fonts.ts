// Font presence inferred from text-box measurements: a probe string is
// measured against the generic families, then with each candidate font
// falling back to them; a width or height difference reveals the font.

const PROBE_TEXT = "mmmmmmmmmmlli\u{1F34F}؁";
const PROBE_SIZE = "72px";
const BASE_FAMILIES = ["monospace", "sans-serif", "serif"];

export const CANDIDATE_FONTS = [
  "Andale Mono", "AppleGothic", "Arial", "Arial Black", "Arial Hebrew",
  "Arial MT", "Arial Narrow", "Arial Rounded MT Bold", "Arial Unicode MS",
  "Bitstream Vera Sans Mono", "Book Antiqua", "Bookman Old Style", "Calibri",
  "Cambria", "Cambria Math", "Century", "Century Gothic", "Century Schoolbook",
  "Comic Sans", "Comic Sans MS", "Consolas", "Courier", "Courier New",
  "Garamond", "Geneva", "Georgia", "Helvetica", "Helvetica Neue", "Impact",
  "Lucida Bright", "Lucida Calligraphy", "Lucida Console", "Lucida Fax",
  "LUCIDA GRANDE", "Lucida Handwriting", "Lucida Sans",
  "Lucida Sans Typewriter", "Lucida Sans Unicode", "Microsoft Sans Serif",
  "Monaco", "Monotype Corsiva", "MS Gothic", "MS Outlook", "MS PGothic",
  "MS Reference Sans Serif", "MS Sans Serif", "MS Serif", "MYRIAD",
  "MYRIAD PRO", "Palatino", "Palatino Linotype", "Segoe Print",
  "Segoe Script", "Segoe UI", "Segoe UI Light", "Segoe UI Semibold",
  "Segoe UI Symbol", "Tahoma", "Times", "Times New Roman",
  "Times New Roman PS", "Trebuchet MS", "Verdana", "Wingdings",
  "Wingdings 2", "Wingdings 3",
];

export function detectFonts(): string[] {
  const canvas = document.createElement("canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("2d context unavailable");
  }
  const baseWidths = new Map<string, number>();
  for (const family of BASE_FAMILIES) {
    ctx.font = `${PROBE_SIZE} ${family}`;
    baseWidths.set(family, ctx.measureText(PROBE_TEXT).width);
  }
  const present: string[] = [];
  for (const font of CANDIDATE_FONTS) {
    for (const family of BASE_FAMILIES) {
      ctx.font = `${PROBE_SIZE} '${font}', ${family}`;
      if (ctx.measureText(PROBE_TEXT).width !== baseWidths.get(family)) {
        present.push(font);
        break;
      }
    }
  }
  return present;
}
