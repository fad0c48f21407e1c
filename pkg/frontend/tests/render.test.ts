import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  renderErrorBanner,
  renderMessageHtml,
  renderObjectives,
  renderScheduleTable,
  renderTimelineStrip,
} from "../src/render.js";
import type { Objectives, ScheduleRow } from "../src/types.js";

const ROWS: ScheduleRow[] = [
  { school: "Galileo HS", start: "7:50 AM" },
  { school: "Balboa HS", start: "8:40 AM" },
  { school: "Muir (John) PK", start: "9:30 AM" },
];

const OBJECTIVES: Objectives = {
  peak_load: 2565,
  peak_load_hundreds: "25.65",
  avg_deviation_minutes: "8.5",
  load_display: "25.65 (2,565 students)",
  deviation_display: "8.5 minutes",
};

describe("renderScheduleTable", () => {
  it("renders one row per school with highlights on changed ones", () => {
    const html = renderScheduleTable(ROWS, new Set(["Balboa HS"]));
    expect(html.match(/<tr/g)).toHaveLength(4); // header + 3 schools
    expect(html).toContain('<tr class="changed"><td>Balboa HS</td>');
    expect(html).toContain("<td>Galileo HS</td><td>7:50 AM</td>");
  });

  it("escapes markup in names", () => {
    const html = renderScheduleTable([{ school: "<b>x</b>", start: "7:50 AM" }]);
    expect(html).toContain("&lt;b&gt;x&lt;/b&gt;");
  });
});

describe("renderObjectives", () => {
  it("shows both objectives in both display units", () => {
    const html = renderObjectives(OBJECTIVES);
    expect(html).toContain("25.65 (2,565 students)");
    expect(html).toContain("8.5 minutes");
  });
});

describe("renderTimelineStrip", () => {
  it("groups schools by slot in slot order", () => {
    const html = renderTimelineStrip(ROWS);
    const first = html.indexOf("7:50 AM");
    const second = html.indexOf("8:40 AM");
    const third = html.indexOf("9:30 AM");
    expect(first).toBeGreaterThan(-1);
    expect(first).toBeLessThan(second);
    expect(second).toBeLessThan(third);
    expect(html).toContain("Galileo HS");
  });
});

describe("renderMessageHtml", () => {
  it("turns bullet lines into list items", () => {
    const html = renderMessageHtml(
      "Would you like to:\n- Adjust the limit?\n- Try an earlier slot?\n- Cap a subset?",
    );
    expect(html.match(/<li>/g)).toHaveLength(3);
    expect(html).toContain("<li>Adjust the limit?</li>");
  });

  it("renders pipe tables as HTML tables", () => {
    const html = renderMessageHtml(
      "| School Name | Proposed Start |\n| --- | --- |\n| Galileo HS | 7:50 AM |",
    );
    expect(html).toContain("<th>School Name</th>");
    expect(html).toContain("<td>Galileo HS</td>");
    expect(html).not.toContain("---");
  });

  it("keeps plain prose as paragraphs and escapes it", () => {
    const html = renderMessageHtml("hello <world>\nsecond line");
    expect(html).toBe("<p>hello &lt;world&gt; second line</p>");
  });
});

describe("renderErrorBanner", () => {
  it("offers a retry action", () => {
    const html = renderErrorBanner("server down");
    expect(html).toContain("server down");
    expect(html).toContain('data-action="retry"');
  });
});

describe("escapeHtml", () => {
  it("escapes the usual suspects", () => {
    expect(escapeHtml('<a href="x">&</a>')).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});
