import type {
  Assignment,
  AuditBatch,
  ConflictCase,
  HealthStatus,
  SubmitResult,
  VerdictDraft,
} from './types';

/** A non-2xx API response; `detail` is the server's error text, verbatim. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`API error ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

export type ApiClientOptions = {
  baseUrl: string;
  token?: string;
  fetchImpl?: typeof fetch;
};

/**
 * Typed client for the review service. Consumes the HTTP API exactly as
 * served -- no client-side caches of authoritative state.
 */
export class ReviewApiClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchImpl: typeof fetch;

  constructor(options: ApiClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, '');
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request<T>(
    method: 'GET' | 'POST',
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers['X-Review-Token'] = this.token;
    if (body !== undefined) headers['Content-Type'] = 'application/json';
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        const parsed = JSON.parse(text) as { detail?: unknown };
        if (typeof parsed.detail === 'string') detail = parsed.detail;
      } catch {
        // non-JSON error body; surface it as-is
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  health(): Promise<HealthStatus> {
    return this.request('GET', '/health');
  }

  assignments(reviewerId: string): Promise<Assignment[]> {
    const query = encodeURIComponent(reviewerId);
    return this.request('GET', `/assignments?reviewer=${query}`);
  }

  submitVerdict(
    caseId: string,
    reviewerId: string,
    draft: VerdictDraft,
  ): Promise<SubmitResult> {
    return this.request(
      'POST',
      `/cases/${encodeURIComponent(caseId)}/verdicts`,
      { reviewer_id: reviewerId, ...draft },
    );
  }

  conflicts(): Promise<ConflictCase[]> {
    return this.request('GET', '/conflicts');
  }

  routeArbitration(caseId: string, reviewerId: string): Promise<Assignment> {
    return this.request(
      'POST',
      `/cases/${encodeURIComponent(caseId)}/arbitration`,
      { reviewer_id: reviewerId },
    );
  }

  createAudit(fraction: number, seed: number): Promise<AuditBatch> {
    return this.request('POST', '/audits', { fraction, seed });
  }

  getAudit(auditId: string): Promise<AuditBatch> {
    return this.request('GET', `/audits/${encodeURIComponent(auditId)}`);
  }

  exportRecords(): Promise<Array<Record<string, unknown>>> {
    return this.request('GET', '/export');
  }
}
