/** DOM wiring: connects the session controller to the page. */

import { SessionApi } from "./api.js";
import { renderErrorBanner, renderModelSummary, renderObjectives, renderTimelineStrip } from "./render.js";
import { SessionController } from "./session.js";

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

export function mountApp(baseUrl = ""): void {
  const controller = new SessionController(new SessionApi(baseUrl));
  const history = byId("history");
  const schedulePanel = byId("schedule-panel");
  const objectivesPanel = byId("objectives-panel");
  const summaryPanel = byId("summary-panel");
  const form = byId("composer") as HTMLFormElement;
  const input = byId("composer-input") as HTMLTextAreaElement;
  const sendButton = byId("composer-send") as HTMLButtonElement;
  const banner = byId("banner");

  controller.subscribe((session) => {
    history.innerHTML = session.messages
      .map((m) => `<div class="message ${m.role}">${m.html}</div>`)
      .join("");
    history.scrollTop = history.scrollHeight;
    schedulePanel.innerHTML =
      controller.renderLatestScheduleTable() + renderTimelineStrip(session.latestSchedule);
    objectivesPanel.innerHTML = renderObjectives(session.latestObjectives);
    summaryPanel.innerHTML = renderModelSummary(session.modelSummary);
    input.disabled = session.turnInFlight;
    sendButton.disabled = session.turnInFlight;
  });

  const boot = async () => {
    banner.innerHTML = "";
    try {
      await controller.start();
    } catch (err) {
      banner.innerHTML = renderErrorBanner(
        err instanceof Error ? err.message : "the scheduling service is unreachable",
      );
    }
  };

  banner.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.action === "retry") {
      void boot();
    }
  });

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    void controller.send(text).then((accepted) => {
      if (accepted) input.value = "";
    });
  });

  void boot();
}

if (typeof document !== "undefined" && document.getElementById("history")) {
  mountApp();
}
