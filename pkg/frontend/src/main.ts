import { Api } from "./api";
import { App } from "./app";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// served from the same origin as the API; annotator identity via ?annotator=
const annotator = new URLSearchParams(window.location.search).get("annotator") ?? "anonymous";
void new App({
  root,
  api: new Api(""),
  annotatorId: annotator,
  storage: window.sessionStorage,
}).boot();
