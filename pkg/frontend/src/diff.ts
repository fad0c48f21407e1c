/** Which schools moved between two consecutive proposals. */

import type { ScheduleRow } from "./types.js";

export function scheduleDiff(
  prev: ScheduleRow[] | null,
  next: ScheduleRow[],
): Set<string> {
  if (prev === null) {
    return new Set();
  }
  const before = new Map(prev.map((row) => [row.school, row.start]));
  const changed = new Set<string>();
  for (const row of next) {
    const was = before.get(row.school);
    if (was !== undefined && was !== row.start) {
      changed.add(row.school);
    }
  }
  return changed;
}
