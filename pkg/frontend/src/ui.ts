import { ChoiceToken } from "./api";
import { FlickerDriver } from "./flicker";
import { ImageLoader } from "./presentation";
import { SessionController } from "./session";

// DOM layer. Renders whatever state the controller is in; all protocol
// logic stays in session.ts so this file is the only one touching the DOM.

export class BrowserImageLoader implements ImageLoader {
  private cache = new Map<string, HTMLImageElement>();

  constructor(private readonly toUrl: (path: string) => string) {}

  async load(path: string): Promise<HTMLImageElement> {
    const cached = this.cache.get(path);
    if (cached) return cached;
    const img = new Image();
    img.src = this.toUrl(path);
    await img.decode(); // rejects on network/decode failure
    this.cache.set(path, img);
    return img;
  }

  url(path: string): string {
    return this.toUrl(path);
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class StudyView {
  private driver: FlickerDriver | null = null;
  private breakTimer: number | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly controller: SessionController,
    private readonly loader: BrowserImageLoader,
  ) {
    document.addEventListener("keydown", (evt) => this.onKey(evt));
  }

  private onKey(evt: KeyboardEvent): void {
    const map: Record<string, ChoiceToken> = {
      ArrowLeft: "left",
      ArrowRight: "right",
      " ": "not_sure",
    };
    const choice = map[evt.key];
    if (choice) {
      evt.preventDefault();
      void this.choose(choice);
    }
  }

  private async choose(choice: ChoiceToken): Promise<void> {
    const accepted = await this.controller.choose(choice);
    if (accepted) this.render();
  }

  private clearTimers(): void {
    this.driver?.stop();
    this.driver = null;
    if (this.breakTimer !== null) {
      clearInterval(this.breakTimer);
      this.breakTimer = null;
    }
  }

  render(): void {
    this.clearTimers();
    this.root.replaceChildren();
    const state = this.controller.state;

    switch (state.kind) {
      case "consent":
        this.renderConsent();
        break;
      case "screening":
        this.renderScreening();
        break;
      case "rejected":
        this.renderMessage(
          "Thank you for your interest",
          "This study requires normal or corrected-to-normal vision and your consent. You cannot take part this time.",
        );
        break;
      case "item":
        this.renderItem();
        break;
      case "break":
        this.renderBreak();
        break;
      case "done":
        this.renderMessage("Session complete", `Your completion code: ${state.completionCode}`);
        break;
      case "aborted":
        this.renderMessage("Something went wrong", state.reason);
        break;
    }
  }

  private renderConsent(): void {
    const card = el("div", "card");
    card.append(
      el("h1", undefined, "Light field quality study"),
      el(
        "p",
        undefined,
        "You will compare pairs of images that alternate with a reference, " +
          "and report which side flickers more. The session includes a short " +
          "training round and one mandatory break.",
      ),
    );
    const btn = el("button", "primary", "I consent to take part");
    btn.onclick = () => {
      this.controller.consentGiven();
      this.render();
    };
    card.append(btn);
    this.root.append(card);
  }

  private renderScreening(): void {
    const card = el("div", "card");
    card.append(el("h1", undefined, "Before we start"));
    const acuity = el("input");
    acuity.type = "checkbox";
    const color = el("input");
    color.type = "checkbox";
    for (const [box, text] of [
      [acuity, "I have normal or corrected-to-normal visual acuity."],
      [color, "I have normal color vision."],
    ] as const) {
      const label = el("label");
      label.append(box, document.createTextNode(" " + text));
      card.append(label);
    }
    const btn = el("button", "primary", "Continue");
    btn.onclick = async () => {
      btn.disabled = true;
      await this.controller.submitScreening(acuity.checked, color.checked);
      this.render();
    };
    card.append(btn);
    this.root.append(card);
  }

  private renderItem(): void {
    if (this.controller.state.kind !== "item") return;
    const presentation = this.controller.state.presentation;
    const item = presentation.item;

    const stage = el("div", "stage");
    if (item.phase === "training") {
      stage.append(el("div", "phase-tag", "Training"));
    }

    const panels = el("div", "panels");
    const leftImg = el("img", "panel");
    const rightImg = el("img", "panel");
    panels.append(leftImg, rightImg);
    stage.append(panels);

    const prompt = el("p", "prompt", "Which side flickers more?");
    stage.append(prompt);

    const buttons = el("div", "buttons");
    const mk = (label: string, choice: ChoiceToken) => {
      const b = el("button", "choice", label);
      b.disabled = true;
      b.onclick = () => void this.choose(choice);
      buttons.append(b);
      return b;
    };
    const all = [mk("Left (←)", "left"), mk("Not sure (space)", "not_sure"), mk("Right (→)", "right")];
    stage.append(buttons);

    // neutral progress, no quality hints
    const progress = el("div", "progress");
    const fill = el("div", "progress-fill");
    fill.style.width = `${(100 * item.index) / Math.max(1, item.total)}%`;
    progress.append(fill);
    stage.append(progress);
    this.root.append(stage);

    // one shared driver swaps both panels in the same callback, so the two
    // sides can never show different phases
    this.driver = new FlickerDriver(presentation.clock, (phase) => {
      const shown = presentation.panelImages(phase);
      leftImg.src = this.loader.url(shown.left);
      rightImg.src = this.loader.url(shown.right);
      const enabled = presentation.buttonsEnabled();
      for (const b of all) b.disabled = !enabled;
    });
    this.driver.start();
  }

  private renderBreak(): void {
    const card = el("div", "card");
    card.append(
      el("h1", undefined, "Break"),
      el("p", undefined, "Please rest your eyes. The study continues automatically."),
    );
    const remaining = el("p", "countdown");
    card.append(remaining);
    this.root.append(card);

    let finished = false;
    const tick = () => {
      const ms = this.controller.breakRemainingMs();
      remaining.textContent = `${Math.ceil(ms / 1000)} s`;
      if (ms <= 0 && !finished) {
        finished = true; // the async advance must only be issued once
        if (this.breakTimer !== null) clearInterval(this.breakTimer);
        this.breakTimer = null;
        void this.controller.finishBreak().then(() => this.render());
      }
    };
    tick();
    if (!finished) this.breakTimer = setInterval(tick, 250) as unknown as number;
  }

  private renderMessage(title: string, body: string): void {
    const card = el("div", "card");
    card.append(el("h1", undefined, title), el("p", undefined, body));
    this.root.append(card);
  }
}
