/** Signed contributions map onto a green -> white -> red scale,
 * normalized by the largest absolute contribution on screen. */

export function contributionColor(value: number, maxAbs: number): string {
  if (maxAbs <= 0) return "rgb(255, 255, 255)";
  const t = Math.max(-1, Math.min(1, value / maxAbs));
  // t = -1 green, 0 white, +1 red
  if (t >= 0) {
    const other = Math.round(255 * (1 - t));
    return `rgb(255, ${other}, ${other})`;
  }
  const other = Math.round(255 * (1 + t));
  return `rgb(${other}, 255, ${other})`;
}

export function maxAbsContribution(values: number[]): number {
  return values.reduce((acc, v) => Math.max(acc, Math.abs(v)), 0);
}
