import { describe, expect, it } from 'vitest';

import {
  escapeHtml,
  renderCodePane,
  spansValid,
  splitLines,
} from '../src/highlight';

describe('escapeHtml', () => {
  it('escapes markup-significant characters', () => {
    expect(escapeHtml('<script>"a" & \'b\'</script>')).toBe(
      '&lt;script&gt;&quot;a&quot; &amp; &#39;b&#39;&lt;/script&gt;',
    );
  });

  it('leaves plain text alone', () => {
    expect(escapeHtml('return out')).toBe('return out');
  });
});

describe('splitLines', () => {
  it('drops only a single trailing newline', () => {
    expect(splitLines('a\nb\n')).toEqual(['a', 'b']);
    expect(splitLines('a\nb')).toEqual(['a', 'b']);
    expect(splitLines('a\n\n')).toEqual(['a', '']);
  });
});

describe('spansValid', () => {
  const code = 'l1\nl2\nl3\n';

  it('accepts in-range spans', () => {
    expect(spansValid(code, [[1, 1], [2, 3]])).toBe(true);
  });

  it('rejects spans past the last line', () => {
    expect(spansValid(code, [[2, 4]])).toBe(false);
  });

  it('rejects inverted and zero-based spans', () => {
    expect(spansValid(code, [[3, 2]])).toBe(false);
    expect(spansValid(code, [[0, 1]])).toBe(false);
  });
});

describe('renderCodePane', () => {
  const code = 'alpha\nbeta\ngamma\n';

  it('marks exactly the spanned lines', () => {
    const html = renderCodePane(code, [[2, 2]]);
    expect(html).toContain('<mark class="patch-line">beta</mark>');
    expect(html).not.toContain('<mark class="patch-line">alpha</mark>');
    expect(html).not.toContain('<mark class="patch-line">gamma</mark>');
  });

  it('renders without highlights when a span is stale', () => {
    const html = renderCodePane(code, [[2, 99]]);
    expect(html).not.toContain('<mark');
    expect(html).toContain('beta'); // the code itself still renders
  });

  it('escapes code content inside panes', () => {
    const html = renderCodePane('if (a < b) {}\n', [[1, 1]]);
    expect(html).toContain('a &lt; b');
    expect(html).not.toContain('a < b');
  });

  it('numbers every line', () => {
    const html = renderCodePane(code);
    expect(html).toContain('data-line="1"');
    expect(html).toContain('data-line="3"');
    expect(html).not.toContain('data-line="4"');
  });
});
