/** Pure HTML-string renderers; no DOM access, so they are unit-testable. */

import type { Objectives, ScheduleRow } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const SLOT_ORDER = ["7:50 AM", "8:40 AM", "9:30 AM"];

/** Schedule table; rows for schools whose slot changed carry class="changed". */
export function renderScheduleTable(
  rows: ScheduleRow[],
  changed: Set<string> = new Set(),
): string {
  const body = rows
    .map((row) => {
      const cls = changed.has(row.school) ? ' class="changed"' : "";
      return `<tr${cls}><td>${escapeHtml(row.school)}</td><td>${escapeHtml(row.start)}</td></tr>`;
    })
    .join("");
  return (
    '<table class="schedule"><thead><tr><th>School</th><th>Proposed Start</th></tr></thead>' +
    `<tbody>${body}</tbody></table>`
  );
}

/** Compact per-slot strip: slot label plus the schools assigned to it. */
export function renderTimelineStrip(rows: ScheduleRow[]): string {
  const slots = SLOT_ORDER.map((slot) => {
    const schools = rows.filter((r) => r.start === slot).map((r) => escapeHtml(r.school));
    return `<div class="slot"><span class="slot-label">${slot}</span> ${schools.join(", ")}</div>`;
  });
  return `<div class="timeline">${slots.join("")}</div>`;
}

/** Both objectives in both display units. */
export function renderObjectives(objectives: Objectives): string {
  return (
    '<div class="objectives">' +
    `<span class="peak">peak students: ${escapeHtml(objectives.load_display)}</span>` +
    `<span class="deviation">avg change (min): ${escapeHtml(objectives.deviation_display)}</span>` +
    "</div>"
  );
}

function renderMarkdownTable(lines: string[]): string {
  const cells = (line: string) =>
    line
      .replace(/^\|/, "")
      .replace(/\|$/, "")
      .split("|")
      .map((cell) => cell.trim());
  const header = cells(lines[0]);
  const body = lines.slice(1).filter((line) => !/^[\s|:-]+$/.test(line));
  const head = `<thead><tr>${header.map((h) => `<th>${escapeHtml(h)}</th>`).join("")}</tr></thead>`;
  const rows = body
    .map((line) => `<tr>${cells(line).map((c) => `<td>${escapeHtml(c)}</td>`).join("")}</tr>`)
    .join("");
  return `<table>${head}<tbody>${rows}</tbody></table>`;
}

/**
 * Render assistant/user text. The agent speaks markdown-ish: bullet lines
 * become list items (this is how infeasibility alternatives arrive), pipe
 * tables become tables, everything else becomes paragraphs.
 */
export function renderMessageHtml(text: string): string {
  const blocks: string[] = [];
  const lines = text.split("\n");
  let i = 0;
  while (i < lines.length) {
    const line = lines[i];
    if (line.trim() === "") {
      i += 1;
      continue;
    }
    if (line.trimStart().startsWith("|")) {
      const tableLines: string[] = [];
      while (i < lines.length && lines[i].trimStart().startsWith("|")) {
        tableLines.push(lines[i].trim());
        i += 1;
      }
      blocks.push(renderMarkdownTable(tableLines));
      continue;
    }
    if (/^\s*[-*]\s+/.test(line)) {
      const items: string[] = [];
      while (i < lines.length && /^\s*[-*]\s+/.test(lines[i])) {
        items.push(lines[i].replace(/^\s*[-*]\s+/, ""));
        i += 1;
      }
      blocks.push(`<ul>${items.map((item) => `<li>${escapeHtml(item)}</li>`).join("")}</ul>`);
      continue;
    }
    const paragraph: string[] = [line];
    i += 1;
    while (
      i < lines.length &&
      lines[i].trim() !== "" &&
      !lines[i].trimStart().startsWith("|") &&
      !/^\s*[-*]\s+/.test(lines[i])
    ) {
      paragraph.push(lines[i]);
      i += 1;
    }
    blocks.push(`<p>${escapeHtml(paragraph.join(" "))}</p>`);
  }
  return blocks.join("");
}

export function renderModelSummary(summary: string): string {
  return `<pre class="model-summary">${escapeHtml(summary)}</pre>`;
}

export function renderErrorBanner(message: string): string {
  return (
    `<div class="error-banner" role="alert">${escapeHtml(message)} ` +
    '<button data-action="retry">Retry</button></div>'
  );
}
