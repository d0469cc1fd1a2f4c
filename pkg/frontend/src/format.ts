// Presentation-only helpers. Amounts arrive as integer minor units and
// ratio displays arrive preformatted by the server; nothing here computes
// a financial quantity, it only adds separators and labels.

export function money(minorUnits: number): string {
  return minorUnits.toLocaleString("en-US");
}

export function classColor(cls: string): string {
  switch (cls) {
    case "Good":
      return "good";
    case "Watch":
      return "watch";
    case "Alert":
      return "alert";
    default:
      return "undef";
  }
}

export function shortHash(hex: string, n = 12): string {
  return hex.length > n ? hex.slice(0, n) + "…" : hex;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
