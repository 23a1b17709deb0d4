/**
 * Patch-span highlighting for the side-by-side code panes.
 *
 * Spans are 1-based inclusive line ranges from the corpus annotations.
 * When any span is stale relative to the code (out of range, inverted),
 * the pane renders without highlights rather than guessing offsets.
 */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function splitLines(code: string): string[] {
  const lines = code.split('\n');
  // a trailing newline does not introduce a phantom last line
  if (lines.length > 1 && lines[lines.length - 1] === '') lines.pop();
  return lines;
}

export function spansValid(
  code: string,
  spans: Array<[number, number]>,
): boolean {
  const lineCount = splitLines(code).length;
  return spans.every(
    ([start, end]) => start >= 1 && start <= end && end <= lineCount,
  );
}

function lineHighlighted(
  lineNo: number,
  spans: Array<[number, number]>,
): boolean {
  return spans.some(([start, end]) => lineNo >= start && lineNo <= end);
}

/** One `<pre>` code pane; highlighted lines are wrapped in `<mark>`. */
export function renderCodePane(
  code: string,
  spans: Array<[number, number]> = [],
  paneClass = 'code-pane',
): string {
  const usable = spans.length > 0 && spansValid(code, spans);
  const rows = splitLines(code).map((line, i) => {
    const lineNo = i + 1;
    const content = escapeHtml(line) || '&nbsp;';
    const body =
      usable && lineHighlighted(lineNo, spans)
        ? `<mark class="patch-line">${content}</mark>`
        : content;
    return `<span class="line" data-line="${lineNo}">${body}</span>`;
  });
  return `<pre class="${paneClass}">${rows.join('\n')}</pre>`;
}
