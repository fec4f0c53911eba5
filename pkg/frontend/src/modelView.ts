import { contributionColor, maxAbsContribution } from "./color";
import { fmt, fmtPercent } from "./format";
import type { BreakdownPayload, ModelPayload, SubscaleBreakdown } from "./types";

/** Three-column diagram of the whole computation: features feed their
 * subscale, subscales feed the output.  Node colors follow each
 * subscale's weighted contribution, rescaled to the current breakdown.
 * Clicking a feature opens its binarization, a subscale its calculation,
 * and the output node the weighted combination. */
export function renderModelView(
  root: HTMLElement,
  model: ModelPayload,
  breakdown: BreakdownPayload | null,
  previous: BreakdownPayload | null = null,
): void {
  root.innerHTML = "";
  root.classList.add("model-view");
  const popup = document.createElement("div");
  popup.className = "popup";
  popup.hidden = true;

  const bySubscale = new Map<string, SubscaleBreakdown>();
  for (const sub of breakdown?.subscales ?? []) bySubscale.set(sub.name, sub);
  const maxAbs = maxAbsContribution(
    (breakdown?.subscales ?? []).map((s) => s.contribution),
  );

  const columns = document.createElement("div");
  columns.className = "columns";

  const featureCol = document.createElement("div");
  featureCol.className = "column features-column";
  const subscaleCol = document.createElement("div");
  subscaleCol.className = "column subscales-column";
  const outputCol = document.createElement("div");
  outputCol.className = "column output-column";

  for (const sub of model.subscales) {
    const group = document.createElement("div");
    group.className = "feature-group";
    for (const feature of sub.features) {
      const node = document.createElement("button");
      node.className = "node feature-node";
      node.dataset.feature = feature;
      node.textContent = feature;
      node.addEventListener("click", () =>
        showBinarization(popup, model, breakdown, feature),
      );
      group.appendChild(node);
    }
    const arrow = document.createElement("span");
    arrow.className = "arrow";
    arrow.textContent = "→";
    group.appendChild(arrow);
    featureCol.appendChild(group);

    const live = bySubscale.get(sub.name);
    const node = document.createElement("button");
    node.className = "node subscale-node";
    node.dataset.subscale = sub.name;
    node.textContent = live
      ? `${sub.name}  ${fmtPercent(live.probability)}`
      : sub.name;
    if (live) {
      node.style.backgroundColor = contributionColor(live.contribution, maxAbs);
      node.dataset.contribution = fmt(live.contribution);
    }
    node.addEventListener("click", () => showSubscale(popup, model, live, sub.name));
    subscaleCol.appendChild(node);
  }

  const output = document.createElement("button");
  output.className = "node output-node";
  if (breakdown) {
    output.textContent = `risk ${fmtPercent(breakdown.final_probability)}`;
    output.style.backgroundColor = contributionColor(
      breakdown.final_score,
      Math.abs(breakdown.final_score) || 1,
    );
  } else {
    output.textContent = "risk";
  }
  output.addEventListener("click", () => showCombination(popup, model, breakdown));
  outputCol.appendChild(output);

  if (previous && breakdown) {
    const ghost = document.createElement("div");
    ghost.className = "ghost";
    ghost.textContent = `was ${fmtPercent(previous.final_probability)}`;
    outputCol.appendChild(ghost);
  }

  columns.append(featureCol, subscaleCol, outputCol);
  root.append(columns, popup);
}

function openPopup(popup: HTMLElement, title: string): HTMLElement {
  popup.hidden = false;
  popup.innerHTML = "";
  const heading = document.createElement("h3");
  heading.textContent = title;
  const close = document.createElement("button");
  close.className = "popup-close";
  close.textContent = "close";
  close.addEventListener("click", () => {
    popup.hidden = true;
  });
  popup.append(heading, close);
  const body = document.createElement("div");
  body.className = "popup-body";
  popup.appendChild(body);
  return body;
}

/** The points table for one feature, with the current observation's
 * active bits when a breakdown is on screen. */
function showBinarization(
  popup: HTMLElement,
  model: ModelPayload,
  breakdown: BreakdownPayload | null,
  feature: string,
): void {
  const body = openPopup(popup, `${feature}: binarization`);
  const table = document.createElement("table");
  table.className = "score-table";
  const sub = model.subscales.find((s) => s.features.includes(feature));
  const rows = sub?.score_tables.find((t) => t.feature === feature)?.rows ?? [];
  for (const row of rows) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${row.condition}</td><td class="points">${fmt(row.points)}</td>`;
    table.appendChild(tr);
  }
  body.appendChild(table);
  if (breakdown) {
    const view = breakdown.features.find((f) => f.name === feature);
    if (view) {
      const bits = document.createElement("ul");
      bits.className = "bits";
      for (const bit of view.bits) {
        const li = document.createElement("li");
        li.className = bit.active ? "bit-active" : "bit-inactive";
        li.textContent = `${bit.condition}: ${bit.active ? "1" : "0"}`;
        bits.appendChild(li);
      }
      body.appendChild(bits);
    }
  }
}

/** A subscale's own mini-model: active conditions, points, raw score,
 * and the transformation of points into its risk estimate. */
function showSubscale(
  popup: HTMLElement,
  model: ModelPayload,
  live: SubscaleBreakdown | undefined,
  name: string,
): void {
  const body = openPopup(popup, `subscale ${name}`);
  const meta = model.subscales.find((s) => s.name === name);
  if (!live || !meta) {
    body.textContent = "enter an observation to see the calculation";
    return;
  }
  const terms = document.createElement("table");
  terms.className = "terms-table";
  for (const term of live.active_terms) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${term.condition}</td><td class="points">${fmt(term.points)}</td>`;
    terms.appendChild(tr);
  }
  const bias = document.createElement("tr");
  bias.innerHTML = `<td>bias</td><td class="points">${fmt(meta.bias)}</td>`;
  terms.appendChild(bias);
  body.appendChild(terms);
  const summary = document.createElement("p");
  summary.className = "subscale-summary";
  summary.textContent =
    `points ${fmt(live.raw_score)} → risk estimate ` +
    `${fmtPercent(live.probability)} (weight ${fmt(live.weight)}, ` +
    `contribution ${fmt(live.contribution)})`;
  body.appendChild(summary);
}

/** The weighted combination behind the final probability. */
function showCombination(
  popup: HTMLElement,
  model: ModelPayload,
  breakdown: BreakdownPayload | null,
): void {
  const body = openPopup(popup, "final combination");
  if (!breakdown) {
    body.textContent = "enter an observation to see the combination";
    return;
  }
  const table = document.createElement("table");
  table.className = "combination-table";
  for (const sub of breakdown.subscales) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${sub.name}</td>` +
      `<td>${fmt(sub.weight)} × ${fmt(sub.probability)}</td>` +
      `<td class="points">${fmt(sub.contribution)}</td>`;
    table.appendChild(tr);
  }
  const bias = document.createElement("tr");
  bias.innerHTML = `<td>bias</td><td></td><td class="points">${fmt(breakdown.bias)}</td>`;
  table.appendChild(bias);
  body.appendChild(table);
  const total = document.createElement("p");
  total.className = "combination-total";
  total.textContent =
    `score ${fmt(breakdown.final_score)} → probability ` +
    `${fmt(breakdown.final_probability)}`;
  body.appendChild(total);
}
