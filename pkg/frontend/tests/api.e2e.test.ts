/**
 * End-to-end double-blind checks against the real review service.
 *
 * The suite spawns the Python API with a small fixture store, then drives
 * two reviewer sessions through the typed client and asserts that neither
 * session can observe the other's verdict before submitting its own.
 */

import { spawn, type ChildProcess } from 'node:child_process';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiError, ReviewApiClient } from '../src/api';
import { renderArbitrationView, renderCaseView } from '../src/views';
import type { Assignment } from '../src/types';

const PORT = 8765 + (process.pid % 500);
const BASE_URL = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForHealth(timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE_URL}/health`);
      if (response.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`review service did not come up on ${BASE_URL}`);
}

beforeAll(async () => {
  server = spawn(
    'python3',
    [new URL('./serve_fixture.py', import.meta.url).pathname, String(PORT)],
    { stdio: 'ignore' },
  );
  await waitForHealth();
}, 20000);

afterAll(() => {
  server?.kill();
});

const sessionA = new ReviewApiClient({ baseUrl: BASE_URL });
const sessionB = new ReviewApiClient({ baseUrl: BASE_URL });
const lead = new ReviewApiClient({ baseUrl: BASE_URL });

const MARKER_A = 'marker-only-reviewer-a-knows';

describe('double-blind end-to-end', () => {
  it('serves the fixture queue to both reviewers', async () => {
    const forA = await sessionA.assignments('reviewer-a');
    const forB = await sessionB.assignments('reviewer-b');
    expect(forA.map((a) => a.case_id)).toEqual([
      'case-0',
      'case-1',
      'case-2',
    ]);
    expect(forB).toHaveLength(3);
  });

  it("never exposes reviewer A's verdict to reviewer B pre-submission", async () => {
    await sessionA.submitVerdict('case-0', 'reviewer-a', {
      is_functional: true,
      isVul: true,
      justification: MARKER_A,
    });

    const forB = await sessionB.assignments('reviewer-b');
    const payload = JSON.stringify(forB);
    expect(payload).not.toContain(MARKER_A);
    expect(payload).not.toContain('"isVul"');

    // ... and nothing rendered from those payloads can leak it either
    for (const assignment of forB) {
      expect(renderCaseView(assignment)).not.toContain(MARKER_A);
    }
  });

  it('refuses an empty justification server-side', async () => {
    await expect(
      sessionB.submitVerdict('case-0', 'reviewer-b', {
        is_functional: true,
        isVul: false,
        justification: '   ',
      }),
    ).rejects.toMatchObject({ status: 400 });
  });

  it('routes the conflict and lifts the blind only for the arbiter', async () => {
    await sessionB.submitVerdict('case-0', 'reviewer-b', {
      is_functional: true,
      isVul: false,
      justification: 'parameterized in the target runtime',
    });

    const conflicts = await lead.conflicts();
    expect(conflicts.map((c) => c.case_id)).toEqual(['case-0']);

    const bundle = await lead.routeArbitration('case-0', 'reviewer-c');
    expect(bundle.initial_verdicts).toHaveLength(2);

    const forArbiter = await lead.assignments('reviewer-c');
    const arbitration = forArbiter.find(
      (a): a is Assignment => a.case_id === 'case-0',
    );
    expect(arbitration?.role).toBe('arbitration');
    const html = renderArbitrationView(arbitration!);
    const quotes = html.match(/class="prior-justification"/g);
    expect(quotes).toHaveLength(2);
    expect(html).toContain(MARKER_A);
    expect(html).toContain('parameterized in the target runtime');
  });

  it('finalizes on the arbiter verdict and rejects duplicates verbatim', async () => {
    const result = await lead.submitVerdict('case-0', 'reviewer-c', {
      is_functional: true,
      isVul: true,
      justification: 'raw input still reaches the page',
    });
    expect(result.state).toBe('finalized');

    let rejection: ApiError | null = null;
    try {
      await sessionA.submitVerdict('case-0', 'reviewer-a', {
        is_functional: true,
        isVul: true,
        justification: 'second thoughts',
      });
    } catch (error) {
      rejection = error as ApiError;
    }
    expect(rejection).toBeInstanceOf(ApiError);
    expect(rejection!.status).toBe(409);
    expect(rejection!.detail.length).toBeGreaterThan(0);

    const exported = await lead.exportRecords();
    expect(exported).toHaveLength(1);
    expect(exported[0]).toMatchObject({
      sample_id: 'sample-0',
      isVul: true,
      provenance: 'human',
    });
  });
});
