/** Payload types of the annotation service API. */

export interface GestureInfo {
  id: string;
  name: string;
  kind: "symbolic" | "deictic";
  description: string;
}

export interface GesturesResponse {
  gestures: GestureInfo[];
  w_max: number;
}

export interface SentenceInfo {
  id: string;
  text: string;
  tokens: string[];
}

export interface LabelPayload {
  gesture_id: string;
  start: number;
  len: number;
}

export interface SessionResponse {
  session_id: string;
  annotator_id: string;
  sentences: SentenceInfo[];
  total: number;
  completed: number;
  submitted: string[];
  labels: Record<string, LabelPayload[]>;
}

export interface NextResponse {
  done: boolean;
  index: number;
  total: number;
  sentence: SentenceInfo | null;
}

export interface SubmitResponse {
  accepted: number;
  sentence_id: string;
  completed: number;
  total: number;
}

export interface ProgressResponse {
  annotator_id: string;
  session_id: string;
  completed: number;
  total: number;
}
