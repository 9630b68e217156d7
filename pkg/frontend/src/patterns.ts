// Tri-state pattern selector: each of the seven feature bits is ignored,
// required 0, or required 1. Converts to the serve-mode mask/bits query.

export type TriState = "ignore" | "0" | "1";

export const FEATURE_LABELS = [
  "F1 Trend",
  "F2 T. Linearity",
  "F3 Seasonality",
  "F4 S. Correlation",
  "F5 R. ACF1",
  "F6 Complexity",
  "F7 Stationarity",
] as const;

export function initialStates(): TriState[] {
  return Array(7).fill("ignore") as TriState[];
}

export function cycleState(state: TriState): TriState {
  if (state === "ignore") return "1";
  if (state === "1") return "0";
  return "ignore";
}

/** Query strings for /leaderboard?level=pattern, or null when every toggle is ignored. */
export function toQuery(states: TriState[]): { mask: string; bits: string } | null {
  const names: string[] = [];
  const bits: string[] = [];
  states.forEach((s, i) => {
    if (s !== "ignore") {
      names.push(`F${i + 1}`);
      bits.push(s);
    }
  });
  if (names.length === 0) return null;
  return { mask: names.join(","), bits: bits.join(",") };
}

export function describe(states: TriState[]): string {
  const q = toQuery(states);
  if (!q) return "all variates (no pattern constraint)";
  const parts = q.mask.split(",").map((name, i) => `${name}=${q.bits.split(",")[i]}`);
  return parts.join(", ");
}

/** True when the code string (e.g. "1010010") satisfies the constraints. */
export function matchesCode(states: TriState[], code: string): boolean {
  if (code.length !== 7) return false;
  return states.every((s, i) => s === "ignore" || code[i] === s);
}
