// Typed client for the annotation service. All persistent state lives
// server-side; this wrapper only shapes requests and decodes replies.

import type { Criteria } from './score.js';

export interface Progress {
  done: number;
  total: number;
}

export interface TaskView {
  done?: boolean;
  sample_id?: string;
  screenshot_url?: string;
  progress: Progress;
}

export interface StoredAnnotation {
  sample_id: string;
  annotator_id: string;
  group_id: number;
  criteria: Criteria;
  score: number;
}

export interface ConsistencyReport {
  annotators: Record<string, { group: number; histogram: number[] }>;
  groups: Record<string, { consensus_means: number[]; mean: number; variance: number; samples: number }>;
}

export interface ReviewCandidate {
  sample_id: string;
  score: number;
  token_len: number;
  screenshot_url: string;
  decision: boolean | null;
}

export interface MetaInfo {
  criteria: { key: string; label: string }[];
  samples: number;
}

export class ConflictError extends Error {
  constructor() {
    super('already annotated');
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl = '',
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) throw new Error(`${path} failed: ${response.status}`);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (response.status === 409) throw new ConflictError();
    if (!response.ok) throw new Error(`${path} failed: ${response.status}`);
    return (await response.json()) as T;
  }

  meta(): Promise<MetaInfo> {
    return this.getJson('/meta');
  }

  register(annotatorId: string, groupId?: number): Promise<{ annotator_id: string; group_id: number }> {
    return this.postJson('/annotators', { annotator_id: annotatorId, group_id: groupId ?? null });
  }

  nextTask(annotator: string): Promise<TaskView> {
    return this.getJson(`/tasks/next?annotator=${encodeURIComponent(annotator)}`);
  }

  submit(sampleId: string, annotatorId: string, criteria: Criteria, replace = true): Promise<StoredAnnotation> {
    return this.postJson('/annotations', {
      sample_id: sampleId,
      annotator_id: annotatorId,
      criteria,
      replace,
    });
  }

  /** Existing annotation for pre-filling a revisited task, or null. */
  async existing(sampleId: string, annotatorId: string): Promise<StoredAnnotation | null> {
    const response = await this.fetchFn(
      `${this.baseUrl}/annotations/${encodeURIComponent(sampleId)}/${encodeURIComponent(annotatorId)}`,
    );
    if (response.status === 404) return null;
    if (!response.ok) throw new Error(`existing annotation lookup failed: ${response.status}`);
    return (await response.json()) as StoredAnnotation;
  }

  consistency(): Promise<ConsistencyReport> {
    return this.getJson('/reports/consistency');
  }

  reviewQueue(): Promise<{ candidates: ReviewCandidate[] }> {
    return this.getJson('/review/queue');
  }

  decide(sampleId: string, keep: boolean): Promise<{ sample_id: string; keep: boolean }> {
    return this.postJson('/review/decisions', { sample_id: sampleId, keep });
  }
}
