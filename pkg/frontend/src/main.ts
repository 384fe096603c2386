import { HelpLoopClient } from "./api";
import { InstructorConsole } from "./instructorConsole";
import { startPolling, type Poller } from "./poll";
import { StudentPanel } from "./studentPanel";

const REFRESH_MS = 3000;

interface Settings {
  studentToken: string;
  instructorToken: string;
  assignmentId: string;
  questionId: string;
}

function loadSettings(): Settings {
  return {
    studentToken: localStorage.getItem("helploop.studentToken") ?? "",
    instructorToken: localStorage.getItem("helploop.instructorToken") ?? "",
    assignmentId: localStorage.getItem("helploop.assignmentId") ?? "a1",
    questionId: localStorage.getItem("helploop.questionId") ?? "a1-q1",
  };
}

function saveSettings(settings: Settings): void {
  localStorage.setItem("helploop.studentToken", settings.studentToken);
  localStorage.setItem("helploop.instructorToken", settings.instructorToken);
  localStorage.setItem("helploop.assignmentId", settings.assignmentId);
  localStorage.setItem("helploop.questionId", settings.questionId);
}

function input(id: string): HTMLInputElement {
  return document.getElementById(id) as HTMLInputElement;
}

function main(): void {
  const settings = loadSettings();
  input("setting-student-token").value = settings.studentToken;
  input("setting-instructor-token").value = settings.instructorToken;
  input("setting-assignment").value = settings.assignmentId;
  input("setting-question").value = settings.questionId;

  const studentRoot = document.getElementById("student-root") as HTMLElement;
  const instructorRoot = document.getElementById("instructor-root") as HTMLElement;

  let studentPanel: StudentPanel | null = null;
  let instructorConsole: InstructorConsole | null = null;
  let poller: Poller | null = null;
  let activeTab = "student";

  const repaintStudent = () => {
    if (studentPanel !== null) {
      const comment = (document.getElementById("student-comment") as HTMLInputElement | null)?.value ?? "";
      const code = (document.getElementById("student-code") as HTMLTextAreaElement | null)?.value ?? "";
      studentRoot.innerHTML = studentPanel.render();
      const commentBox = document.getElementById("student-comment") as HTMLInputElement | null;
      const codeBox = document.getElementById("student-code") as HTMLTextAreaElement | null;
      if (commentBox) commentBox.value = comment;
      if (codeBox) codeBox.value = code;
    }
  };
  const repaintInstructor = () => {
    if (instructorConsole !== null) {
      instructorRoot.innerHTML = instructorConsole.render();
    }
  };

  const connect = () => {
    const next: Settings = {
      studentToken: input("setting-student-token").value.trim(),
      instructorToken: input("setting-instructor-token").value.trim(),
      assignmentId: input("setting-assignment").value.trim(),
      questionId: input("setting-question").value.trim(),
    };
    saveSettings(next);
    poller?.stop();
    studentPanel = next.studentToken
      ? new StudentPanel(
          new HelpLoopClient("", next.studentToken),
          next.assignmentId,
          next.questionId,
        )
      : null;
    instructorConsole = next.instructorToken
      ? new InstructorConsole(new HelpLoopClient("", next.instructorToken))
      : null;
    void instructorConsole?.claimNext().then(repaintInstructor);
    poller = startPolling(
      async () => {
        if (activeTab === "student" && studentPanel !== null) {
          await studentPanel.refresh();
          repaintStudent();
        }
      },
      REFRESH_MS,
      (error) => console.error("refresh failed:", error),
    );
  };

  document.getElementById("connect")?.addEventListener("click", connect);

  for (const tab of Array.from(document.querySelectorAll("[data-tab]"))) {
    tab.addEventListener("click", () => {
      activeTab = (tab as HTMLElement).dataset["tab"] ?? "student";
      document.getElementById("student-view")?.classList.toggle("hidden", activeTab !== "student");
      document.getElementById("instructor-view")?.classList.toggle("hidden", activeTab !== "instructor");
    });
  }

  studentRoot.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
    if (!target || studentPanel === null) {
      return;
    }
    const panel = studentPanel;
    const action = target.dataset["action"];
    if (action === "request") {
      const comment = (document.getElementById("student-comment") as HTMLInputElement).value;
      const code = (document.getElementById("student-code") as HTMLTextAreaElement).value;
      void panel
        .requestHint(target.dataset["hintType"] as never, comment, code)
        .then(repaintStudent);
    } else if (action === "rate") {
      void panel
        .rate(target.dataset["hintId"] ?? "", target.dataset["rating"] as never)
        .then(repaintStudent);
    } else if (action === "escalate") {
      const note = window.prompt("Why was this hint unhelpful?") ?? "";
      void panel.escalate(target.dataset["hintId"] ?? "", note).then(repaintStudent);
    }
  });

  instructorRoot.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]") as HTMLElement | null;
    if (!target || instructorConsole === null) {
      return;
    }
    const console_ = instructorConsole;
    const action = target.dataset["action"];
    if (action === "claim") {
      void console_.claimNext().then(repaintInstructor);
    } else if (action === "respond") {
      const text = (document.getElementById("feedback-text") as HTMLTextAreaElement).value;
      void console_.respond(text).then(repaintInstructor);
    } else if (action === "release") {
      void console_.release().then(repaintInstructor);
    }
  });

  connect();
}

document.addEventListener("DOMContentLoaded", main);
