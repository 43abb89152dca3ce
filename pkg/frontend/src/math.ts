// Client-side math typesetting from raw LaTeX strings. KaTeX is loaded as a
// plain script (window.katex); any render failure falls back to the raw
// source in monospace so reviewers always see something auditable.

export interface KatexLike {
  render(tex: string, element: HTMLElement, options?: { displayMode?: boolean; throwOnError?: boolean }): void;
}

declare global {
  interface Window {
    katex?: KatexLike;
  }
}

export function renderMath(target: HTMLElement, latex: string, display: boolean): void {
  const katex = typeof window !== "undefined" ? window.katex : undefined;
  if (katex) {
    try {
      katex.render(latex, target, { displayMode: display, throwOnError: true });
      return;
    } catch {
      // fall through to the monospace fallback below
    }
  }
  const fallback = document.createElement("code");
  fallback.className = "math-fallback";
  fallback.textContent = latex;
  target.textContent = "";
  target.appendChild(fallback);
}

interface Segment {
  kind: "text" | "inline" | "display";
  content: string;
}

/** Split prose with $...$ / $$...$$ segments; unterminated math stays text. */
export function splitMathSegments(text: string): Segment[] {
  const segments: Segment[] = [];
  let buffer = "";
  let i = 0;
  while (i < text.length) {
    const c = text[i];
    if (c === "\\" && i + 1 < text.length) {
      buffer += text.slice(i, i + 2);
      i += 2;
      continue;
    }
    if (c === "$") {
      const display = text.startsWith("$$", i);
      const delim = display ? "$$" : "$";
      const close = text.indexOf(delim, i + delim.length);
      if (close === -1) {
        buffer += text.slice(i);
        break;
      }
      if (buffer) {
        segments.push({ kind: "text", content: buffer });
        buffer = "";
      }
      segments.push({
        kind: display ? "display" : "inline",
        content: text.slice(i + delim.length, close),
      });
      i = close + delim.length;
      continue;
    }
    buffer += c;
    i += 1;
  }
  if (buffer) segments.push({ kind: "text", content: buffer });
  return segments;
}

/** Render a question/answer body: prose as text nodes, math via KaTeX. */
export function renderRichText(target: HTMLElement, text: string): void {
  target.textContent = "";
  for (const segment of splitMathSegments(text)) {
    if (segment.kind === "text") {
      target.appendChild(document.createTextNode(segment.content));
      continue;
    }
    const holder = document.createElement(segment.kind === "display" ? "div" : "span");
    holder.className = segment.kind === "display" ? "math-display" : "math-inline";
    renderMath(holder, segment.content, segment.kind === "display");
    target.appendChild(holder);
  }
}
