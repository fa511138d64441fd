/**
 * Browser bootstrap: wires the controller to the page.
 *
 * Configuration is a single base URL (?api=..., default same origin);
 * the session comes from ?worker= and ?class= query parameters.
 */

import { StudyApi } from "./api.js";
import type { SessionInfo } from "./api.js";
import { JudgeController } from "./controller.js";
import { render } from "./render.js";

function sessionFromLocation(search: string): SessionInfo {
  const params = new URLSearchParams(search);
  const worker = params.get("worker") ?? "";
  const workerClass = params.get("class") === "expert" ? "expert" : "generic";
  return { worker, workerClass };
}

export function bootstrap(root: HTMLElement, search: string): JudgeController {
  const params = new URLSearchParams(search);
  const base = params.get("api") ?? "";
  const api = new StudyApi(base);
  const controller = new JudgeController(api, sessionFromLocation(search), (state) => {
    root.innerHTML = render(state, { assetUrl: (id) => api.assetUrl(id) });
  });

  root.addEventListener("change", (event) => {
    const target = event.target;
    if (target instanceof HTMLInputElement && target.name === "choice") {
      controller.select(target.value);
    }
  });
  root.addEventListener("click", (event) => {
    const target = event.target;
    if (!(target instanceof HTMLElement)) return;
    const action = target.dataset["action"];
    if (action === "retry") void controller.start();
  });
  root.addEventListener("submit", (event) => {
    event.preventDefault();
    void controller.submit();
  });

  void controller.start();
  return controller;
}

const root = typeof document !== "undefined" ? document.getElementById("app") : null;
if (root) {
  bootstrap(root, window.location.search);
}
