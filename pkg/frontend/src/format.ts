/** Display formatting helpers; all numbers shown at three decimals. */

export function fmt(x: number, digits = 3): string {
  return x.toFixed(digits);
}

export function fmtPercent(fraction: number, digits = 1): string {
  return `${(100 * fraction).toFixed(digits)}%`;
}

/** "700 (7.1%)" as used on the rule card. */
export function fmtSupport(support: number, fraction: number): string {
  return `${support} (${fmtPercent(fraction)})`;
}
