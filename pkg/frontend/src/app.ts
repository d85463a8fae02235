// Annotation app wiring: session picker, task view with keyboard shortcuts,
// offline-tolerant submission, review queue, and live consistency charts.

import { ApiClient, ConflictError, TaskView } from './api.js';
import { renderConsistency } from './charts.js';
import { Criteria, emptyCriteria, keyForDigit, scoreOf } from './score.js';
import { SubmissionQueue } from './queue.js';

interface Session {
  annotator: string;
  group: number;
}

export class AnnotatorApp {
  private session: Session | null = null;
  private criteria: Criteria = emptyCriteria();
  private criteriaKeys: string[] = [];
  private criteriaLabels = new Map<string, string>();
  private task: TaskView | null = null;
  private screenshotLoaded = false;

  constructor(
    private root: Document,
    private api: ApiClient,
    private queue: SubmissionQueue,
  ) {}

  private el<T extends HTMLElement>(id: string): T {
    const found = this.root.getElementById(id);
    if (!found) throw new Error(`missing element #${id}`);
    return found as T;
  }

  async start(): Promise<void> {
    const meta = await this.api.meta();
    this.criteriaKeys = meta.criteria.map((c) => c.key);
    for (const c of meta.criteria) this.criteriaLabels.set(c.key, c.label);
    this.criteria = emptyCriteria(this.criteriaKeys);

    this.el<HTMLButtonElement>('join').addEventListener('click', () => void this.join());
    this.el<HTMLButtonElement>('submit').addEventListener('click', () => void this.submit());
    this.el<HTMLButtonElement>('skip').addEventListener('click', () => void this.advance());
    this.el<HTMLButtonElement>('show-review').addEventListener('click', () => void this.showReview());
    this.el<HTMLButtonElement>('show-charts').addEventListener('click', () => void this.refreshCharts());
    this.root.addEventListener('keydown', (event) => this.onKey(event as KeyboardEvent));
    window.addEventListener('online', () => void this.flushQueue());
    this.renderQueueState();
  }

  private async join(): Promise<void> {
    const name = this.el<HTMLInputElement>('annotator-name').value.trim();
    if (!name) return;
    const groupRaw = this.el<HTMLSelectElement>('annotator-group').value;
    const registered = await this.api.register(name, groupRaw ? Number(groupRaw) : undefined);
    this.session = { annotator: registered.annotator_id, group: registered.group_id };
    this.el('session-info').textContent = `${registered.annotator_id} / group ${registered.group_id}`;
    this.el('login').classList.add('hidden');
    this.el('workbench').classList.remove('hidden');
    this.renderCriteriaList();
    await this.flushQueue();
    await this.advance();
  }

  private renderCriteriaList(): void {
    const list = this.el('criteria');
    list.textContent = '';
    this.criteriaKeys.forEach((key, index) => {
      const item = document.createElement('label');
      item.className = 'criterion';
      const box = document.createElement('input');
      box.type = 'checkbox';
      box.id = `crit-${key}`;
      box.checked = this.criteria[key];
      box.addEventListener('change', () => {
        this.criteria = { ...this.criteria, [key]: box.checked };
        this.renderScore();
      });
      const text = document.createElement('span');
      text.textContent = `${index + 1}. ${this.criteriaLabels.get(key) ?? key}`;
      item.appendChild(box);
      item.appendChild(text);
      list.appendChild(item);
    });
    this.renderScore();
  }

  private renderScore(): void {
    this.el('score-badge').textContent = String(scoreOf(this.criteria));
    this.updateSubmitState();
  }

  private updateSubmitState(): void {
    const busy = !this.task || this.task.done === true || !this.screenshotLoaded;
    this.el<HTMLButtonElement>('submit').disabled = busy;
  }

  private async advance(): Promise<void> {
    if (!this.session) return;
    this.task = await this.api.nextTask(this.session.annotator);
    const progress = this.task.progress;
    this.el('progress').textContent = `${progress.done} / ${progress.total}`;
    this.screenshotLoaded = false;
    this.criteria = emptyCriteria(this.criteriaKeys);
    if (this.task.done || !this.task.sample_id) {
      this.el('sample-id').textContent = 'all samples annotated';
      this.el<HTMLImageElement>('screenshot').removeAttribute('src');
      this.renderCriteriaList();
      return;
    }
    this.el('sample-id').textContent = this.task.sample_id;
    const existing = await this.api.existing(this.task.sample_id, this.session.annotator);
    if (existing) this.criteria = { ...emptyCriteria(this.criteriaKeys), ...existing.criteria };
    this.renderCriteriaList();
    const image = this.el<HTMLImageElement>('screenshot');
    image.onload = () => {
      this.screenshotLoaded = true;
      this.updateSubmitState();
    };
    image.onerror = () => {
      this.screenshotLoaded = false;
      this.updateSubmitState();
    };
    image.src = this.task.screenshot_url ?? '';
  }

  private async submit(): Promise<void> {
    if (!this.session || !this.task?.sample_id) return;
    const payload = {
      sample_id: this.task.sample_id,
      annotator_id: this.session.annotator,
      criteria: this.criteria,
      queued_at: Date.now(),
    };
    try {
      await this.api.submit(payload.sample_id, payload.annotator_id, payload.criteria);
    } catch (error) {
      if (!(error instanceof ConflictError)) {
        // Network trouble: park the submission and move on.
        this.queue.enqueue(payload);
        this.renderQueueState();
      }
    }
    await this.refreshCharts();
    await this.advance();
  }

  private async flushQueue(): Promise<void> {
    const flushed = await this.queue.flush(async (item) => {
      try {
        await this.api.submit(item.sample_id, item.annotator_id, item.criteria);
        return 'sent';
      } catch (error) {
        return error instanceof ConflictError ? 'conflict' : 'failed';
      }
    });
    if (flushed > 0) this.renderQueueState();
  }

  private renderQueueState(): void {
    const size = this.queue.size();
    this.el('queue-state').textContent = size ? `${size} queued offline` : '';
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.session || this.el('workbench').classList.contains('hidden')) return;
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === 'INPUT' || target.tagName === 'SELECT') &&
        (target as HTMLInputElement).type === 'text') {
      return;
    }
    if (event.key === 'Enter') {
      event.preventDefault();
      void this.submit();
      return;
    }
    const digit = Number(event.key);
    if (!Number.isNaN(digit)) {
      const key = keyForDigit(digit, this.criteriaKeys);
      if (key) {
        this.criteria = { ...this.criteria, [key]: !this.criteria[key] };
        const box = this.root.getElementById(`crit-${key}`) as HTMLInputElement | null;
        if (box) box.checked = this.criteria[key];
        this.renderScore();
      }
    }
  }

  private async refreshCharts(): Promise<void> {
    const report = await this.api.consistency();
    renderConsistency(this.el('charts'), report);
  }

  private async showReview(): Promise<void> {
    const panel = this.el('review');
    panel.classList.remove('hidden');
    const { candidates } = await this.api.reviewQueue();
    const list = this.el('review-list');
    list.textContent = '';
    if (candidates.length === 0) {
      const empty = document.createElement('p');
      empty.className = 'muted';
      empty.textContent = 'Review queue is empty.';
      list.appendChild(empty);
      return;
    }
    for (const candidate of candidates) {
      const row = document.createElement('div');
      row.className = 'review-row';
      const shot = document.createElement('img');
      shot.src = candidate.screenshot_url;
      shot.className = 'review-shot';
      const info = document.createElement('span');
      info.textContent = `${candidate.sample_id} (score ${candidate.score.toFixed(1)}, ${candidate.token_len} tokens)`;
      const state = document.createElement('span');
      state.className = 'review-state';
      state.textContent =
        candidate.decision === null ? 'undecided' : candidate.decision ? 'kept' : 'dropped';
      const keep = document.createElement('button');
      keep.textContent = 'Keep';
      keep.addEventListener('click', () => {
        void this.api.decide(candidate.sample_id, true).then(() => (state.textContent = 'kept'));
      });
      const drop = document.createElement('button');
      drop.textContent = 'Drop';
      drop.addEventListener('click', () => {
        void this.api.decide(candidate.sample_id, false).then(() => (state.textContent = 'dropped'));
      });
      row.append(shot, info, keep, drop, state);
      list.appendChild(row);
    }
  }
}
