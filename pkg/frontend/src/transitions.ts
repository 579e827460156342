/** Job action legality, mirrored from the scheduler's transition table.
 *
 * Button enablement is derived from this table and nothing else: the console
 * never hand-codes "suspend is allowed while running" in a view.  The server
 * holds the authoritative copy and answers 409 for anything not listed here,
 * so a drift between the two shows up as a conflict toast, not a wrong write.
 */

export type JobState =
  | "QUEUED"
  | "RUNNING"
  | "SUSPENDED"
  | "STOPPED"
  | "DELETED"
  | "FINISHED"
  | "FAILED";

export type JobAction = "suspend" | "resume" | "stop" | "delete" | "reexecute";

export const JOB_STATES: readonly JobState[] = [
  "QUEUED",
  "RUNNING",
  "SUSPENDED",
  "STOPPED",
  "DELETED",
  "FINISHED",
  "FAILED",
];

export const JOB_ACTIONS: readonly JobAction[] = [
  "suspend",
  "resume",
  "stop",
  "delete",
  "reexecute",
];

export const LEGAL_TRANSITIONS: readonly (readonly [JobState, JobAction, JobState])[] = [
  ["RUNNING", "suspend", "SUSPENDED"],
  ["SUSPENDED", "resume", "RUNNING"],
  ["RUNNING", "stop", "STOPPED"],
  ["SUSPENDED", "stop", "STOPPED"],
  ["QUEUED", "delete", "DELETED"],
  ["SUSPENDED", "delete", "DELETED"],
  ["STOPPED", "reexecute", "QUEUED"],
  ["FINISHED", "reexecute", "QUEUED"],
  ["FAILED", "reexecute", "QUEUED"],
];

/** Actions a job in `state` may take, in fixed display order. */
export function enabledActions(state: JobState): JobAction[] {
  const legal = new Set(
    LEGAL_TRANSITIONS.filter(([from]) => from === state).map(([, action]) => action),
  );
  return JOB_ACTIONS.filter((a) => legal.has(a));
}

export function isLegal(state: JobState, action: JobAction): boolean {
  return LEGAL_TRANSITIONS.some(([from, a]) => from === state && a === action);
}

export function isJobState(value: string): value is JobState {
  return (JOB_STATES as readonly string[]).includes(value);
}
