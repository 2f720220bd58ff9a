import { StudyApi } from "./api";
import { SessionController } from "./session";
import { BrowserImageLoader, StudyView } from "./ui";

// Entry point. The study token arrives in the URL:
//   index.html?study=<study_id>&observer=<observer_id>[&base=<service origin>]

const params = new URLSearchParams(window.location.search);
const studyId = params.get("study");
const observerId = params.get("observer");
const base = params.get("base") ?? ""; // same-origin by default

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

if (!studyId || !observerId) {
  root.textContent = "Missing study token: open this page as index.html?study=...&observer=...";
} else {
  const api = new StudyApi(base, studyId, observerId, (...args) => fetch(...args));
  const loader = new BrowserImageLoader((path) => api.assetUrl(path));
  const controller = new SessionController(api, loader);
  const view = new StudyView(root, controller, loader);

  controller
    .resume()
    .catch((err) => {
      // a brand-new observer has no server state yet; start at consent
      console.warn("resume failed, starting fresh:", err);
      controller.state = { kind: "consent" };
    })
    .finally(() => view.render());
}
