import type { BreakdownPayload, ExplanationPayload, FeatureInputs } from "./types";

/** One browsing session: the inputs being probed and the latest
 * completed server responses.  Displayed numbers always come from these
 * payloads; the client never computes model math of its own (beyond the
 * re-sum display check). */
export class SessionState {
  inputs: FeatureInputs = {};
  breakdown: BreakdownPayload | null = null;
  previousBreakdown: BreakdownPayload | null = null; // ghost values
  explanation: ExplanationPayload | null = null;
  pending = false;

  private predictToken = 0;
  private explainToken = 0;

  nextPredictToken(): number {
    return ++this.predictToken;
  }

  /** Out-of-order responses are dropped, never rendered. */
  acceptBreakdown(token: number, payload: BreakdownPayload): boolean {
    if (token !== this.predictToken) return false;
    this.previousBreakdown = this.breakdown;
    this.breakdown = payload;
    return true;
  }

  nextExplainToken(): number {
    return ++this.explainToken;
  }

  acceptExplanation(token: number, payload: ExplanationPayload): boolean {
    if (token !== this.explainToken) return false;
    this.explanation = payload;
    return true;
  }
}

/** Trailing debounce; repeated edits within the window collapse into a
 * single call. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (handle !== undefined) clearTimeout(handle);
    handle = setTimeout(() => {
      handle = undefined;
      fn(...args);
    }, ms);
  };
}

/** Client-side display check: contributions plus bias must re-sum to the
 * displayed final score. */
export function resumScore(payload: BreakdownPayload): number {
  let total = payload.bias;
  for (const sub of payload.subscales) total += sub.contribution;
  return total;
}
