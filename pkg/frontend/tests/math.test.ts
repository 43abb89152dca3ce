import { afterEach, describe, expect, it } from "vitest";

import { renderMath, renderRichText, splitMathSegments } from "../src/math.js";

afterEach(() => {
  delete (window as { katex?: unknown }).katex;
});

describe("math segmentation", () => {
  it("splits prose, inline and display segments", () => {
    const segments = splitMathSegments("Given $x$ we get $$y = x$$ done.");
    expect(segments).toEqual([
      { kind: "text", content: "Given " },
      { kind: "inline", content: "x" },
      { kind: "text", content: " we get " },
      { kind: "display", content: "y = x" },
      { kind: "text", content: " done." },
    ]);
  });

  it("treats escaped dollars and unterminated math as text", () => {
    expect(splitMathSegments("costs \\$5")).toEqual([
      { kind: "text", content: "costs \\$5" },
    ]);
    expect(splitMathSegments("broken $x")).toEqual([
      { kind: "text", content: "broken $x" },
    ]);
  });
});

describe("math rendering", () => {
  it("uses katex when it renders cleanly", () => {
    window.katex = {
      render(tex, element) {
        element.innerHTML = `<span class="katex">${tex}</span>`;
      },
    };
    const holder = document.createElement("div");
    renderMath(holder, "y = x", true);
    expect(holder.querySelector(".katex")).not.toBeNull();
  });

  it("falls back to monospace raw source on render failure", () => {
    window.katex = {
      render() {
        throw new Error("ParseError");
      },
    };
    const holder = document.createElement("div");
    renderMath(holder, "\\undefinedmacro{x}", false);
    const fallback = holder.querySelector("code.math-fallback");
    expect(fallback).not.toBeNull();
    expect(fallback!.textContent).toBe("\\undefinedmacro{x}");
  });

  it("falls back when katex is absent", () => {
    const holder = document.createElement("div");
    renderMath(holder, "y=x", false);
    expect(holder.querySelector("code.math-fallback")).not.toBeNull();
  });

  it("renders rich text with math holders", () => {
    const holder = document.createElement("div");
    renderRichText(holder, "see $a$ and $$b$$");
    expect(holder.querySelectorAll(".math-inline")).toHaveLength(1);
    expect(holder.querySelectorAll(".math-display")).toHaveLength(1);
    expect(holder.textContent).toContain("see");
  });
});
