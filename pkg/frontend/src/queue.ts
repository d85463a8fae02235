// Offline submission queue. Failed POSTs are parked in storage and flushed
// when connectivity returns; a 409 conflict counts as resolved (the server
// already has a record and the user can revisit to edit).

import type { Criteria } from './score.js';

export interface PendingSubmission {
  sample_id: string;
  annotator_id: string;
  criteria: Criteria;
  queued_at: number;
}

export type StorageLike = Pick<Storage, 'getItem' | 'setItem' | 'removeItem'>;

export type SendResult = 'sent' | 'conflict' | 'failed';

export class SubmissionQueue {
  constructor(
    private storage: StorageLike,
    private key = 'webcurate.pending',
  ) {}

  list(): PendingSubmission[] {
    const raw = this.storage.getItem(this.key);
    if (!raw) return [];
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? (parsed as PendingSubmission[]) : [];
    } catch {
      return [];
    }
  }

  private save(items: PendingSubmission[]): void {
    if (items.length === 0) this.storage.removeItem(this.key);
    else this.storage.setItem(this.key, JSON.stringify(items));
  }

  enqueue(item: PendingSubmission): void {
    const items = this.list().filter(
      (p) => !(p.sample_id === item.sample_id && p.annotator_id === item.annotator_id),
    );
    items.push(item);
    this.save(items);
  }

  size(): number {
    return this.list().length;
  }

  clear(): void {
    this.save([]);
  }

  /** Retry everything; returns how many entries were resolved. */
  async flush(send: (item: PendingSubmission) => Promise<SendResult>): Promise<number> {
    const items = this.list();
    const remaining: PendingSubmission[] = [];
    let resolved = 0;
    for (const item of items) {
      let result: SendResult;
      try {
        result = await send(item);
      } catch {
        result = 'failed';
      }
      if (result === 'failed') remaining.push(item);
      else resolved += 1;
    }
    this.save(remaining);
    return resolved;
  }
}

export class MemoryStorage implements StorageLike {
  private data = new Map<string, string>();

  getItem(key: string): string | null {
    return this.data.has(key) ? this.data.get(key)! : null;
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }

  removeItem(key: string): void {
    this.data.delete(key);
  }
}
