/**
 * DOM layer: renders the session state and wires user events to it.
 *
 * Tokens render as buttons (click = anchor, shift-click = extend); the
 * gesture palette shows name, description and a looping preview-media slot
 * (deployment assets under mediaBase, one clip per gesture id). Progress,
 * hints and server rejections render into dedicated regions so tests can
 * assert on them.
 */

import { ApiClient, ApiError, ServiceUnreachableError } from "./api.js";
import { AnnotationSession } from "./session.js";
import type { GestureInfo } from "./types.js";

export interface AppOptions {
  mediaBase?: string;
}

export class App {
  private session: AnnotationSession | null = null;
  private gestures: GestureInfo[] = [];
  private wMax = 10;
  private banner: { kind: "error" | "hint"; text: string } | null = null;
  private annotatorId = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: AppOptions = {},
  ) {}

  /** Fetch gestures and open (or resume) the annotator's session. */
  async start(annotatorId: string): Promise<void> {
    this.annotatorId = annotatorId;
    try {
      const [gestures, session] = await Promise.all([
        this.api.getGestures(),
        this.api.startSession(annotatorId),
      ]);
      this.gestures = gestures.gestures;
      this.wMax = gestures.w_max;
      this.session = new AnnotationSession(session, this.gestures, this.wMax);
      this.banner = null;
    } catch (error) {
      if (error instanceof ServiceUnreachableError) {
        this.banner = { kind: "error", text: "Cannot reach the annotation service." };
      } else {
        this.banner = { kind: "error", text: String(error) };
      }
    }
    this.render();
  }

  handleTokenClick(index: number, shiftKey: boolean): void {
    if (this.session === null) return;
    if (shiftKey) {
      this.session.extendTo(index);
    } else {
      this.session.clickToken(index);
    }
    this.pickUpHint();
    this.render();
  }

  handleAssign(gestureId: string): void {
    if (this.session === null) return;
    this.session.assignGesture(gestureId);
    this.pickUpHint();
    this.render();
  }

  handleUndo(): void {
    this.session?.undo();
    this.render();
  }

  async handleSkip(): Promise<void> {
    if (this.session === null) return;
    await this.submit(this.session.skipPayload());
  }

  async handleSubmit(): Promise<void> {
    if (this.session === null) return;
    await this.submit(this.session.submitPayload());
  }

  private async submit(labels: { gesture_id: string; start: number; len: number }[]) {
    const session = this.session;
    const sentence = session?.current;
    if (!session || !sentence) return;
    try {
      await this.api.submitLabels(session.sessionId, sentence.id, labels);
      session.confirmSubmission(labels);
      this.banner = null;
    } catch (error) {
      if (error instanceof ApiError) {
        this.banner = { kind: "error", text: `Submission rejected: ${error.message}` };
      } else {
        this.banner = { kind: "error", text: "Cannot reach the annotation service." };
      }
    }
    this.render();
  }

  private pickUpHint(): void {
    const hint = this.session?.takeHint();
    if (hint) {
      this.banner = { kind: "hint", text: hint };
    } else if (this.banner?.kind === "hint") {
      this.banner = null;
    }
  }

  retry(): void {
    void this.start(this.annotatorId);
  }

  render(): void {
    const root = this.root;
    root.textContent = "";
    if (this.banner) {
      const banner = el("div", `banner banner-${this.banner.kind}`);
      banner.textContent = this.banner.text;
      if (this.banner.kind === "error" && this.session === null) {
        const retry = el("button", "retry-button");
        retry.textContent = "Retry";
        retry.addEventListener("click", () => this.retry());
        banner.appendChild(retry);
      }
      root.appendChild(banner);
    }
    const session = this.session;
    if (session === null) return;

    if (session.phase === "empty") {
      const empty = el("div", "empty-state");
      empty.textContent = "No sentences are available to annotate.";
      root.appendChild(empty);
      return;
    }
    if (session.phase === "done") {
      const done = el("div", "done-state");
      done.textContent = `Session complete: ${session.completedCount} of ${session.total} sentences annotated. Thank you!`;
      root.appendChild(done);
      return;
    }

    root.appendChild(this.renderProgress(session));
    root.appendChild(this.renderSentence(session));
    root.appendChild(this.renderPendingLabels(session));
    root.appendChild(this.renderActions(session));
    root.appendChild(this.renderPalette());
  }

  private renderProgress(session: AnnotationSession): HTMLElement {
    const progress = el("div", "progress");
    progress.textContent = `Sentence ${session.completedCount + 1} of ${session.total}`;
    return progress;
  }

  private renderSentence(session: AnnotationSession): HTMLElement {
    const container = el("div", "sentence");
    const sentence = session.current;
    if (!sentence) return container;
    const labeled = new Set<number>();
    for (const label of [...session.committedForCurrent(), ...session.pendingLabels]) {
      for (let i = label.start; i < label.start + label.len; i += 1) labeled.add(i);
    }
    sentence.tokens.forEach((token, index) => {
      const button = el("button", "token") as HTMLButtonElement;
      button.textContent = token;
      button.dataset.index = String(index);
      if (labeled.has(index)) button.classList.add("labeled");
      if (session.isLocked(index)) button.classList.add("locked");
      if (session.isSelected(index)) button.classList.add("selected");
      button.addEventListener("click", (event) =>
        this.handleTokenClick(index, (event as MouseEvent).shiftKey),
      );
      container.appendChild(button);
    });
    return container;
  }

  private renderPendingLabels(session: AnnotationSession): HTMLElement {
    const list = el("ul", "pending-labels");
    for (const label of session.pendingLabels) {
      const item = el("li", "pending-label");
      item.textContent = `${label.gestureName} [${label.start}..${label.start + label.len - 1}]`;
      list.appendChild(item);
    }
    return list;
  }

  private renderActions(session: AnnotationSession): HTMLElement {
    const bar = el("div", "actions");
    const undo = el("button", "undo-button") as HTMLButtonElement;
    undo.textContent = "Undo label";
    undo.disabled = session.pendingLabels.length === 0;
    undo.addEventListener("click", () => this.handleUndo());
    const skip = el("button", "skip-button");
    skip.textContent = "No gesture";
    skip.addEventListener("click", () => void this.handleSkip());
    const submit = el("button", "submit-button");
    submit.textContent = "Submit sentence";
    submit.addEventListener("click", () => void this.handleSubmit());
    bar.append(undo, skip, submit);
    return bar;
  }

  private renderPalette(): HTMLElement {
    const palette = el("div", "palette");
    for (const gesture of this.gestures) {
      const card = el("div", "gesture-card");
      card.dataset.gesture = gesture.id;
      const media = el("div", "gesture-media");
      if (this.options.mediaBase) {
        const img = el("img", "gesture-preview") as HTMLImageElement;
        img.src = `${this.options.mediaBase}/${gesture.id}.gif`;
        img.alt = `${gesture.name} preview`;
        media.appendChild(img);
      }
      const name = el("button", "gesture-name");
      name.textContent = gesture.name;
      name.addEventListener("click", () => this.handleAssign(gesture.id));
      const description = el("p", "gesture-description");
      description.textContent = gesture.description;
      card.append(media, name, description);
      palette.appendChild(card);
    }
    return palette;
  }

  /** Test hook: the live session, if any. */
  get currentSession(): AnnotationSession | null {
    return this.session;
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
