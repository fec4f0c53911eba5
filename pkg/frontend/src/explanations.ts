import { fmt, fmtSupport } from "./format";
import type { ExplanationPayload } from "./types";

const RANK_TEXT: Record<number, string> = {
  1: "most important",
  2: "second most important",
  3: "third most important",
};

/** Factor list, rule card, and case table for one explanation payload.
 * The outlier warning renders as a banner while the other panels stay
 * intact. */
export function renderExplanations(
  root: HTMLElement,
  payload: ExplanationPayload,
): void {
  root.innerHTML = "";
  root.classList.add("explanations");

  if (payload.rule_warning) {
    const banner = document.createElement("div");
    banner.className = "warning-banner";
    banner.textContent = payload.rule_warning;
    root.appendChild(banner);
  }

  const factors = document.createElement("section");
  factors.className = "factors";
  const heading = document.createElement("h3");
  heading.textContent = "most important contributing factors";
  factors.appendChild(heading);
  const list = document.createElement("ol");
  for (const factor of payload.factors) {
    const li = document.createElement("li");
    li.className = "factor";
    li.dataset.subscale = factor.subscale;
    const rank = RANK_TEXT[factor.subscale_rank] ?? `rank-${factor.subscale_rank}`;
    li.textContent =
      `${factor.condition} (from the ${rank} subscale, ${factor.subscale}, ` +
      `${fmt(factor.subscale_points)} points)`;
    list.appendChild(li);
  }
  factors.appendChild(list);
  root.appendChild(factors);

  if (payload.rule) {
    const card = document.createElement("section");
    card.className = "rule-card";
    const support = document.createElement("p");
    support.className = "rule-support";
    support.textContent = `For all ${fmtSupport(
      payload.rule.support,
      payload.rule.support_fraction,
    )} people where:`;
    card.appendChild(support);
    const predicates = document.createElement("ul");
    for (const predicate of payload.rule.predicates) {
      const li = document.createElement("li");
      li.textContent = predicate;
      predicates.appendChild(li);
    }
    card.appendChild(predicates);
    const verdict = document.createElement("p");
    verdict.className = "rule-verdict";
    verdict.textContent = `the model predicts ${payload.rule.label_text}.`;
    card.appendChild(verdict);
    root.appendChild(card);
  }

  if (payload.cases.length > 0) {
    root.appendChild(renderCaseTable(payload));
  }
}

function renderCaseTable(payload: ExplanationPayload): HTMLElement {
  const section = document.createElement("section");
  section.className = "cases";
  const heading = document.createElement("h3");
  heading.textContent = "similar cases";
  section.appendChild(heading);

  const columns = Object.keys(payload.cases[0].values);
  const table = document.createElement("table");
  table.className = "case-table";
  const head = document.createElement("tr");
  head.innerHTML =
    "<th>case</th><th>prediction</th><th>label</th><th>similarity</th>" +
    columns.map((c) => `<th>${c}</th>`).join("");
  table.appendChild(head);

  // the current case sits on the top line
  const current = document.createElement("tr");
  current.className = "current-case";
  const byName = new Map(
    payload.prediction.features.map((f) => [f.name, f.value]),
  );
  current.innerHTML =
    "<td>current</td><td></td><td></td><td></td>" +
    columns.map((c) => `<td>${byName.get(c) ?? ""}</td>`).join("");
  table.appendChild(current);

  for (const past of payload.cases) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>#${past.id}</td><td>${past.risk_prediction}</td>` +
      `<td>${past.true_label}</td><td>${past.similarity}</td>` +
      columns.map((c) => `<td>${past.values[c] ?? ""}</td>`).join("");
    table.appendChild(tr);
  }
  section.appendChild(table);
  return section;
}
