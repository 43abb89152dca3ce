// Line diff for the version-conflict view: what the reviewer buffered
// versus what the server now holds.

export interface DiffRow {
  kind: "same" | "removed" | "added";
  text: string;
}

function splitLines(text: string): string[] {
  return text.length ? text.split("\n") : [];
}

/** Classic LCS line diff; small inputs only (question/answer bodies). */
export function diffLines(before: string, after: string): DiffRow[] {
  const a = splitLines(before);
  const b = splitLines(after);
  const table: number[][] = Array.from({ length: a.length + 1 }, () =>
    new Array<number>(b.length + 1).fill(0),
  );
  for (let i = a.length - 1; i >= 0; i -= 1) {
    for (let j = b.length - 1; j >= 0; j -= 1) {
      table[i][j] =
        a[i] === b[j]
          ? table[i + 1][j + 1] + 1
          : Math.max(table[i + 1][j], table[i][j + 1]);
    }
  }
  const rows: DiffRow[] = [];
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      rows.push({ kind: "same", text: a[i] });
      i += 1;
      j += 1;
    } else if (table[i + 1][j] >= table[i][j + 1]) {
      rows.push({ kind: "removed", text: a[i] });
      i += 1;
    } else {
      rows.push({ kind: "added", text: b[j] });
      j += 1;
    }
  }
  for (; i < a.length; i += 1) rows.push({ kind: "removed", text: a[i] });
  for (; j < b.length; j += 1) rows.push({ kind: "added", text: b[j] });
  return rows;
}
