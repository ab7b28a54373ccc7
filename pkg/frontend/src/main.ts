import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}

const app = new App(root, new ApiClient(""), { mediaBase: "media" });

const form = document.getElementById("login-form") as HTMLFormElement | null;
const input = document.getElementById("annotator-id") as HTMLInputElement | null;
if (form && input) {
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const annotatorId = input.value.trim();
    if (annotatorId) {
      form.hidden = true;
      void app.start(annotatorId);
    }
  });
}
