/** Every English string the console shows, in one table.
 *
 * Rendering code must pull text from here instead of embedding literals,
 * so the wording can be audited (or swapped) in one place.
 */

export const STRINGS = {
  appTitle: "openpc console",

  // login / registration
  loginHeading: "Sign in",
  usernameLabel: "Username",
  passwordLabel: "Password",
  displayNameLabel: "Display name",
  loginButton: "Sign in",
  registerHeading: "Request an account",
  registerButton: "Register",
  registerPending: "Account created. An administrator must approve it before you can sign in.",
  sessionExpired: "Your session has expired. Please sign in again.",
  loginFailed: "Sign-in failed. Check your username and password.",

  // navigation
  navBlocks: "Blocks",
  navRequests: "Requests",
  navJobs: "Jobs",
  navAdmin: "Admin",
  logoutButton: "Sign out",

  // block request form
  requestHeading: "Request a block",
  requestNodesLabel: "Nodes",
  requestStartLabel: "Start",
  requestEndLabel: "End",
  requestDescriptionLabel: "Project description",
  requestSubmitButton: "Submit request",
  requestNodesInvalid: "Node count must be a whole number of at least 1.",
  requestPeriodInvalid: "The end of the period must come after its start.",
  requestCreated: "Request submitted. It is waiting for review.",

  // admin review
  reviewHeading: "Pending requests",
  reviewApproveButton: "Approve",
  reviewRejectButton: "Reject",
  reviewReasonLabel: "Reason",
  reviewAllocatedLabel: "Nodes to allocate",
  reviewApprovedNotice: "Request approved.",
  reviewShortfallNotice: "Approved with fewer nodes than requested.",
  reviewRejectedNotice: "Request rejected.",
  reviewConflictToast: "This request was already reviewed by someone else.",
  userApprovedNotice: "Account approved.",

  // block dashboard
  blockHeading: "Block",
  blockOwnerLabel: "Owner",
  blockStateLabel: "State",
  blockPeriodLabel: "Period",
  blockEnvironmentLabel: "Environment",
  blockNodesHeading: "Nodes",
  blockQueueHeading: "Queue configuration",
  blockQueueMissing: "No queue is installed for this block.",
  blockJobsHeading: "Active jobs",
  blockNoJobs: "No active jobs.",
  activateButton: "Activate",
  deactivateButton: "Deactivate",
  environmentApplyButton: "Apply environment",

  // job form
  jobFormHeading: "Submit a job",
  jobEnvironmentLabel: "Environment",
  jobNodesLabel: "Nodes",
  jobCpuLabel: "CPU seconds estimate",
  jobPayloadLabel: "Payload",
  jobSubmitButton: "Submit job",
  jobNodesOutOfRange: "Node count must be between 1 and the size of the block.",
  jobCpuInvalid: "CPU estimate must be a positive number.",
  jobSubmitted: "Job submitted.",

  // job control
  jobHeading: "Job",
  jobStateLabel: "State",
  jobQueueLabel: "Queue",
  jobNodesAssignedLabel: "Assigned nodes",
  jobRunCountLabel: "Runs",
  jobHistoryHeading: "State history",
  jobLogsHeading: "Epilog logs",
  jobNoLogs: "No epilog records yet.",
  downloadLogsButton: "Download logs",
  actionLabels: {
    suspend: "Suspend",
    resume: "Resume",
    stop: "Stop",
    delete: "Delete",
    reexecute: "Re-execute",
  } as Record<string, string>,
  actionNotAllowed: "Not available in the current state.",
  actionConflictToast:
    "The job changed state before the action arrived, so it no longer applies.",

  // generic
  loadingNotice: "Loading...",
  busyNotice: "Waiting for the previous action to finish.",
  forbiddenToast: "The server refused this action for your account.",
  notFoundToast: "The requested record does not exist.",
  validationToast: "The server rejected the submitted values.",
  serverErrorToast: "The server reported an internal error.",
  networkErrorToast: "Could not reach the server.",
} as const;

export type StringTable = typeof STRINGS;

/** Map an HTTP status to the toast text the console shows for it. */
export function toastForStatus(status: number): string {
  if (status === 401) return STRINGS.sessionExpired;
  if (status === 403) return STRINGS.forbiddenToast;
  if (status === 404) return STRINGS.notFoundToast;
  if (status === 409) return STRINGS.actionConflictToast;
  if (status === 422) return STRINGS.validationToast;
  if (status >= 500) return STRINGS.serverErrorToast;
  return STRINGS.networkErrorToast;
}
