// Consistency-chart data shaping plus minimal DOM bar rendering. The data
// helpers are pure so they can be tested without a browser.

import type { ConsistencyReport } from './api.js';

export interface Bar {
  label: string;
  value: number;
  /** 0..1, relative to the tallest bar in the series */
  height: number;
}

export function histogramBars(histogram: number[]): Bar[] {
  const max = Math.max(...histogram, 1);
  return histogram.map((count, score) => ({
    label: String(score),
    value: count,
    height: count / max,
  }));
}

/** Bucket consensus means (0..5 in half-point steps) for the group chart. */
export function consensusBins(means: number[], bins = 11): number[] {
  const counts = new Array(bins).fill(0);
  for (const mean of means) {
    const index = Math.min(bins - 1, Math.max(0, Math.round(mean * 2)));
    counts[index] += 1;
  }
  return counts;
}

export function groupSummaries(report: ConsistencyReport): { group: string; mean: number; samples: number }[] {
  return Object.entries(report.groups)
    .map(([group, stats]) => ({ group, mean: stats.mean, samples: stats.samples }))
    .sort((a, b) => a.group.localeCompare(b.group));
}

export function renderBars(container: HTMLElement, bars: Bar[], title: string): void {
  container.textContent = '';
  const heading = document.createElement('div');
  heading.className = 'chart-title';
  heading.textContent = title;
  container.appendChild(heading);
  const row = document.createElement('div');
  row.className = 'chart-row';
  for (const bar of bars) {
    const column = document.createElement('div');
    column.className = 'chart-col';
    const fill = document.createElement('div');
    fill.className = 'chart-bar';
    fill.style.height = `${Math.round(bar.height * 80)}px`;
    fill.title = `${bar.label}: ${bar.value}`;
    const label = document.createElement('div');
    label.className = 'chart-label';
    label.textContent = bar.label;
    column.appendChild(fill);
    column.appendChild(label);
    row.appendChild(column);
  }
  container.appendChild(row);
}

export function renderConsistency(root: HTMLElement, report: ConsistencyReport): void {
  root.textContent = '';
  const annotators = Object.entries(report.annotators).sort(([a], [b]) => a.localeCompare(b));
  if (annotators.length === 0) {
    const empty = document.createElement('p');
    empty.className = 'muted';
    empty.textContent = 'No annotations yet.';
    root.appendChild(empty);
    return;
  }
  for (const [name, info] of annotators) {
    const panel = document.createElement('div');
    panel.className = 'chart-panel';
    renderBars(panel, histogramBars(info.histogram), `${name} (group ${info.group})`);
    root.appendChild(panel);
  }
  for (const summary of groupSummaries(report)) {
    const group = report.groups[summary.group];
    const panel = document.createElement('div');
    panel.className = 'chart-panel';
    renderBars(
      panel,
      histogramBars(consensusBins(group.consensus_means)),
      `group ${summary.group} consensus (n=${summary.samples}, mean ${summary.mean.toFixed(2)})`,
    );
    root.appendChild(panel);
  }
}
