/**
 * Annotation session state machine.
 *
 * Pure application logic, no DOM: token selection, the sequential-locking
 * rule (everything before the end of the last committed label of the current
 * sentence is no longer selectable), window clamping and payload assembly.
 * By construction the payload sent to the service is always sequential,
 * non-overlapping and within bounds, so the server can only reject a
 * submission if the client state is stale.
 */

import type { GestureInfo, LabelPayload, SentenceInfo, SessionResponse } from "./types.js";

export interface Selection {
  anchor: number;
  extent: number;
}

export interface PendingLabel extends LabelPayload {
  gestureName: string;
}

export type SessionPhase = "annotating" | "done" | "empty";

export class AnnotationSession {
  readonly sessionId: string;
  readonly annotatorId: string;
  readonly gestures: GestureInfo[];
  readonly wMax: number;
  readonly sentences: SentenceInfo[];

  private committed: Map<string, LabelPayload[]>;
  private submitted: Set<string>;
  private cursor: number;
  private pending: PendingLabel[] = [];
  private selection: Selection | null = null;
  private hintMessage: string | null = null;

  constructor(session: SessionResponse, gestures: GestureInfo[], wMax: number) {
    this.sessionId = session.session_id;
    this.annotatorId = session.annotator_id;
    this.gestures = gestures;
    this.wMax = wMax;
    this.sentences = session.sentences;
    this.committed = new Map(Object.entries(session.labels ?? {}));
    this.submitted = new Set(session.submitted ?? []);
    this.cursor = this.sentences.findIndex((s) => !this.submitted.has(s.id));
    if (this.cursor === -1) {
      this.cursor = this.sentences.length;
    }
  }

  get phase(): SessionPhase {
    if (this.sentences.length === 0) return "empty";
    return this.cursor >= this.sentences.length ? "done" : "annotating";
  }

  get current(): SentenceInfo | null {
    return this.phase === "annotating" ? this.sentences[this.cursor] : null;
  }

  get completedCount(): number {
    return this.submitted.size;
  }

  get total(): number {
    return this.sentences.length;
  }

  get pendingLabels(): readonly PendingLabel[] {
    return this.pending;
  }

  get currentSelection(): Selection | null {
    return this.selection;
  }

  /** One-shot hint (locked token, clipped selection, ...); reading clears it. */
  takeHint(): string | null {
    const hint = this.hintMessage;
    this.hintMessage = null;
    return hint;
  }

  /** Labels already accepted by the service for the current sentence. */
  committedForCurrent(): LabelPayload[] {
    const sentence = this.current;
    return sentence ? (this.committed.get(sentence.id) ?? []) : [];
  }

  /** First selectable token index: everything before it is locked. */
  lockedEnd(): number {
    let end = 0;
    for (const label of this.committedForCurrent()) {
      end = Math.max(end, label.start + label.len);
    }
    for (const label of this.pending) {
      end = Math.max(end, label.start + label.len);
    }
    return end;
  }

  isLocked(index: number): boolean {
    return index < this.lockedEnd();
  }

  selectedRange(): { start: number; len: number } | null {
    if (this.selection === null) return null;
    const start = Math.min(this.selection.anchor, this.selection.extent);
    const end = Math.max(this.selection.anchor, this.selection.extent);
    return { start, len: end - start + 1 };
  }

  isSelected(index: number): boolean {
    const range = this.selectedRange();
    return range !== null && index >= range.start && index < range.start + range.len;
  }

  /** Click: set the anchor, or do nothing (with a hint) on a locked token. */
  clickToken(index: number): void {
    const sentence = this.current;
    if (sentence === null || index < 0 || index >= sentence.tokens.length) return;
    if (this.isLocked(index)) {
      this.hintMessage = "This word is already labeled and can no longer be selected.";
      return;
    }
    this.selection = { anchor: index, extent: index };
  }

  /** Shift-click / drag: grow the selection contiguously toward `index`. */
  extendTo(index: number): void {
    const sentence = this.current;
    if (sentence === null || index < 0 || index >= sentence.tokens.length) return;
    if (this.selection === null) {
      this.clickToken(index);
      return;
    }
    if (this.isLocked(index)) {
      this.hintMessage = "Selections cannot cross already-labeled words.";
      return;
    }
    const anchor = this.selection.anchor;
    let extent = index;
    const length = Math.abs(extent - anchor) + 1;
    if (length > this.wMax) {
      extent = extent > anchor ? anchor + this.wMax - 1 : anchor - this.wMax + 1;
      this.hintMessage = `Labels are limited to ${this.wMax} words; selection was clipped.`;
    }
    this.selection = { anchor, extent };
  }

  clearSelection(): void {
    this.selection = null;
  }

  /** Commit the selection as a local label; its tokens lock immediately. */
  assignGesture(gestureId: string): boolean {
    const range = this.selectedRange();
    if (range === null) {
      this.hintMessage = "Select one or more words first.";
      return false;
    }
    const gesture = this.gestures.find((g) => g.id === gestureId);
    if (gesture === undefined) {
      this.hintMessage = `Unknown gesture ${gestureId}.`;
      return false;
    }
    this.pending.push({
      gesture_id: gesture.id,
      gestureName: gesture.name,
      start: range.start,
      len: range.len,
    });
    this.pending.sort((a, b) => a.start - b.start);
    this.selection = null;
    return true;
  }

  /** Remove only the most recent uncommitted label. */
  undo(): boolean {
    if (this.pending.length === 0) return false;
    this.pending.pop();
    return true;
  }

  /** Payload for "this sentence has no gesture". */
  skipPayload(): LabelPayload[] {
    this.pending = [];
    this.selection = null;
    return [];
  }

  /** Payload with every locally committed label, in sentence order. */
  submitPayload(): LabelPayload[] {
    return this.pending.map(({ gesture_id, start, len }) => ({ gesture_id, start, len }));
  }

  /** Advance after the service accepted the submission. */
  confirmSubmission(labels: LabelPayload[]): void {
    const sentence = this.current;
    if (sentence === null) return;
    const existing = this.committed.get(sentence.id) ?? [];
    this.committed.set(sentence.id, [...existing, ...labels]);
    this.submitted.add(sentence.id);
    this.pending = [];
    this.selection = null;
    this.cursor += 1;
  }
}
