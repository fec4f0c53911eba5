import { describe, expect, it, vi } from "vitest";

import { renderInputPanel } from "../src/inputPanel";
import { golden, mount } from "./helpers";

describe("input panel", () => {
  it("renders one row per schema feature", () => {
    const root = mount();
    renderInputPanel(root, golden.model(), () => {});
    expect(root.querySelectorAll(".feature-input")).toHaveLength(23);
  });

  it("labels monotone-increasing blue and decreasing red", () => {
    const root = mount();
    renderInputPanel(root, golden.model(), () => {});
    const burden = root.querySelector(
      '[data-feature="NetFractionRevolvingBurden"] label',
    ) as HTMLElement;
    const estimate = root.querySelector(
      '[data-feature="ExternalRiskEstimate"] label',
    ) as HTMLElement;
    expect(burden.classList.contains("mono-increasing")).toBe(true);
    expect(estimate.classList.contains("mono-decreasing")).toBe(true);
  });

  it("selecting a sentinel code disables the numeric box", () => {
    const root = mount();
    renderInputPanel(root, golden.model(), () => {});
    const row = root.querySelector(
      '[data-feature="MSinceMostRecentDelq"]',
    ) as HTMLElement;
    const special = row.querySelector(".special-box") as HTMLSelectElement;
    const box = row.querySelector(".value-box") as HTMLInputElement;
    special.value = "-7";
    special.dispatchEvent(new Event("change"));
    expect(box.disabled).toBe(true);
    special.value = "";
    special.dispatchEvent(new Event("change"));
    expect(box.disabled).toBe(false);
  });

  it("loading the Demo-1 preset fills every field", () => {
    const root = mount();
    const panel = renderInputPanel(root, golden.model(), () => {});
    panel.setValues(golden.demo1Features());
    const values = panel.readValues();
    expect(values).toEqual(golden.demo1Features());
  });

  it("flags unparseable values inline and withholds them", () => {
    const root = mount();
    const panel = renderInputPanel(root, golden.model(), () => {});
    panel.setValues(golden.demo1Features());
    const row = root.querySelector('[data-feature="AverageMInFile"]') as HTMLElement;
    const box = row.querySelector(".value-box") as HTMLInputElement;
    box.value = "lots";
    box.dispatchEvent(new Event("input"));
    expect(row.querySelector(".invalid-msg")?.textContent).toBe("not a number");
    expect(panel.readValues()).toBeNull();
  });

  it("reports edits through the callback", () => {
    const root = mount();
    const onEdit = vi.fn();
    const panel = renderInputPanel(root, golden.model(), onEdit);
    panel.setValues(golden.demo1Features());
    const box = root.querySelector(
      '[data-feature="AverageMInFile"] .value-box',
    ) as HTMLInputElement;
    box.value = "31";
    box.dispatchEvent(new Event("input"));
    expect(onEdit).toHaveBeenCalledTimes(1);
  });
});
