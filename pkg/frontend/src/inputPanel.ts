import type { FeatureInputs, FeatureSpecView, ModelPayload } from "./types";

export interface InputPanel {
  /** Fill every field (presets, demo observations). */
  setValues(features: FeatureInputs): void;
  /** Current values, or null while any field fails validation. */
  readValues(): FeatureInputs | null;
}

const MONO_CLASS: Record<string, string> = {
  increasing: "mono-increasing", // blue: larger value, larger risk
  decreasing: "mono-decreasing", // red: larger value, smaller risk
  none: "mono-none",
};

function categoryTokens(model: ModelPayload, feature: string): string[] {
  const raw = model as unknown as {
    model?: { scheme?: { category_tokens?: Record<string, string[]> } };
  };
  return raw.model?.scheme?.category_tokens?.[feature] ?? [];
}

/** Editable form with one row per schema feature: a numeric box or a
 * category selector, plus a sentinel-code dropdown where the schema
 * declares special values.  Selecting a sentinel disables the value box. */
export function renderInputPanel(
  root: HTMLElement,
  model: ModelPayload,
  onEdit: () => void,
): InputPanel {
  root.innerHTML = "";
  root.classList.add("input-panel");
  const rows = new Map<
    string,
    { spec: FeatureSpecView; value: HTMLInputElement | HTMLSelectElement; special?: HTMLSelectElement; error: HTMLElement }
  >();

  for (const spec of model.schema.features) {
    const row = document.createElement("div");
    row.className = "feature-input";
    row.dataset.feature = spec.name;

    const label = document.createElement("label");
    label.textContent = spec.name;
    label.className = MONO_CLASS[spec.monotonicity];
    label.title =
      spec.monotonicity === "none"
        ? "no declared risk direction"
        : `risk is ${spec.monotonicity} in this value`;
    row.appendChild(label);

    let value: HTMLInputElement | HTMLSelectElement;
    if (spec.kind === "categorical") {
      const select = document.createElement("select");
      for (const token of categoryTokens(model, spec.name)) {
        const opt = document.createElement("option");
        opt.value = token;
        opt.textContent = token;
        select.appendChild(opt);
      }
      select.addEventListener("change", onEdit);
      value = select;
    } else {
      const input = document.createElement("input");
      input.type = "text";
      input.inputMode = "decimal";
      input.addEventListener("input", () => {
        validate();
        onEdit();
      });
      value = input;
    }
    value.className = "value-box";
    row.appendChild(value);

    let special: HTMLSelectElement | undefined;
    if (spec.special_values.length > 0) {
      special = document.createElement("select");
      special.className = "special-box";
      const normal = document.createElement("option");
      normal.value = "";
      normal.textContent = "value";
      special.appendChild(normal);
      for (const sv of spec.special_values) {
        const opt = document.createElement("option");
        opt.value = String(sv.code);
        opt.textContent = `${sv.code} (${sv.meaning})`;
        special.appendChild(opt);
      }
      special.addEventListener("change", () => {
        (value as HTMLInputElement).disabled = special!.value !== "";
        validate();
        onEdit();
      });
      row.appendChild(special);
    }

    const error = document.createElement("span");
    error.className = "invalid-msg";
    row.appendChild(error);

    rows.set(spec.name, { spec, value, special, error });
    root.appendChild(row);

    function validate() {
      if (spec.kind !== "numeric" || (special && special.value !== "")) {
        error.textContent = "";
        return;
      }
      const text = (value as HTMLInputElement).value.trim();
      error.textContent =
        text === "" || Number.isNaN(Number(text)) ? "not a number" : "";
    }
  }

  return {
    setValues(features: FeatureInputs) {
      for (const [name, row] of rows) {
        if (!(name in features)) continue;
        const v = features[name];
        const codes = row.spec.special_values.map((sv) => sv.code);
        if (row.special && typeof v === "number" && codes.includes(v)) {
          row.special.value = String(v);
          (row.value as HTMLInputElement).value = "";
          (row.value as HTMLInputElement).disabled = true;
        } else {
          if (row.special) {
            row.special.value = "";
            (row.value as HTMLInputElement).disabled = false;
          }
          row.value.value = String(v);
        }
        row.error.textContent = "";
      }
    },
    readValues(): FeatureInputs | null {
      const out: FeatureInputs = {};
      for (const [name, row] of rows) {
        if (row.special && row.special.value !== "") {
          out[name] = Number(row.special.value);
          continue;
        }
        if (row.spec.kind === "categorical") {
          out[name] = row.value.value;
          continue;
        }
        const text = (row.value as HTMLInputElement).value.trim();
        const num = Number(text);
        if (text === "" || Number.isNaN(num)) return null;
        out[name] = num;
      }
      return out;
    },
  };
}
