/**
 * Line-level diff model for the review panes.
 *
 * Highlighting follows set semantics: a line is "changed" only when it
 * belongs to exactly one side's line set, so the highlighted rows are the
 * symmetric difference of the two sets and the badge numbers match the
 * corpus diff statistics. Pane alignment uses a sequence LCS so common
 * lines sit side by side.
 */

export interface DiffStats {
  nDiff: number;
  rDiff: number;
}

export interface AlignedRow {
  left: string | null;
  right: string | null;
  leftChanged: boolean;
  rightChanged: boolean;
}

/** Split like Python's str.splitlines(): no empty tail, "" gives []. */
export function splitLines(text: string): string[] {
  if (text === "") return [];
  const lines = text.split(/\r\n|\r|\n/);
  if (lines.length > 1 && lines[lines.length - 1] === "" && /[\r\n]$/.test(text)) {
    lines.pop();
  }
  return lines;
}

export function lineSetStats(input: string, output: string): DiffStats {
  const inputSet = new Set(splitLines(input));
  const outputSet = new Set(splitLines(output));
  let common = 0;
  for (const line of inputSet) {
    if (outputSet.has(line)) common += 1;
  }
  const union = inputSet.size + outputSet.size - common;
  const nDiff = union - common;
  return { nDiff, rDiff: union > 0 ? nDiff / union : 0 };
}

/** Longest-common-subsequence alignment of the two line sequences. */
export function alignLines(input: string, output: string): AlignedRow[] {
  const a = splitLines(input);
  const b = splitLines(output);
  const inputSet = new Set(a);
  const outputSet = new Set(b);
  const inBoth = (line: string) => inputSet.has(line) && outputSet.has(line);

  const n = a.length;
  const m = b.length;
  const table: number[][] = Array.from({ length: n + 1 }, () =>
    new Array<number>(m + 1).fill(0),
  );
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      table[i][j] =
        a[i] === b[j]
          ? table[i + 1][j + 1] + 1
          : Math.max(table[i + 1][j], table[i][j + 1]);
    }
  }

  const rows: AlignedRow[] = [];
  let i = 0;
  let j = 0;
  while (i < n && j < m) {
    if (a[i] === b[j]) {
      rows.push({ left: a[i], right: b[j], leftChanged: false, rightChanged: false });
      i++;
      j++;
    } else if (table[i + 1][j] >= table[i][j + 1]) {
      rows.push({ left: a[i], right: null, leftChanged: !inBoth(a[i]), rightChanged: false });
      i++;
    } else {
      rows.push({ left: null, right: b[j], leftChanged: false, rightChanged: !inBoth(b[j]) });
      j++;
    }
  }
  for (; i < n; i++) {
    rows.push({ left: a[i], right: null, leftChanged: !inBoth(a[i]), rightChanged: false });
  }
  for (; j < m; j++) {
    rows.push({ left: null, right: b[j], leftChanged: false, rightChanged: !inBoth(b[j]) });
  }
  return rows;
}
