// Wires the console together: setup form, board, and the driver. All
// game knowledge lives on the server; this file only moves strings
// between endpoints and the page.

import { ApiError, LegalMoves, SessionClient, SessionView } from "./api.js";
import { createRequest, PRESETS } from "./presets.js";
import {
  renderBanner,
  renderEvolution,
  renderHeader,
  renderMoves,
  renderTranscript,
} from "./render.js";
import { Driver } from "./store.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const setupPane = el<HTMLElement>("setup");
const boardPane = el<HTMLElement>("board");
const baseUrlInput = el<HTMLInputElement>("base-url");
const presetSelect = el<HTMLSelectElement>("preset");
const blurb = el<HTMLParagraphElement>("blurb");
const setupError = el<HTMLParagraphElement>("setup-error");
const headerBox = el<HTMLElement>("header-box");
const bannerBox = el<HTMLElement>("banner-box");
const evolutionBox = el<HTMLElement>("evolution-box");
const movesBox = el<HTMLElement>("moves-box");
const transcriptBox = el<HTMLElement>("transcript-box");
const playError = el<HTMLParagraphElement>("play-error");

let driver: Driver | null = null;

function showPreset(): void {
  const preset = PRESETS[presetSelect.selectedIndex];
  blurb.textContent = preset ? preset.blurb : "";
}

for (const preset of PRESETS) {
  const option = document.createElement("option");
  option.textContent = preset.name;
  presetSelect.appendChild(option);
}
presetSelect.addEventListener("change", showPreset);
showPreset();

function onView(view: SessionView): void {
  headerBox.innerHTML = renderHeader(view);
  bannerBox.innerHTML = renderBanner(view);
  evolutionBox.innerHTML = renderEvolution(view);
  transcriptBox.innerHTML = renderTranscript(view);
  if (view.status !== "awaiting_env") {
    movesBox.innerHTML = "";
  }
}

function onLegal(moves: LegalMoves): void {
  movesBox.innerHTML = renderMoves(moves);
}

function onError(err: ApiError): void {
  playError.textContent = err.detail;
}

movesBox.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const move = target.dataset.move;
  if (move === undefined || !driver) return;
  playError.textContent = "";
  movesBox.innerHTML = "";
  void driver.play(move);
});

el<HTMLButtonElement>("create").addEventListener("click", async () => {
  const preset = PRESETS[presetSelect.selectedIndex];
  if (!preset) return;
  setupError.textContent = "";
  const client = new SessionClient(baseUrlInput.value.replace(/\/$/, ""));
  try {
    const view = await client.create(createRequest(preset));
    driver = new Driver(client, view.id, { onView, onLegal, onError });
    setupPane.hidden = true;
    boardPane.hidden = false;
    playError.textContent = "";
    driver.start(view);
  } catch (err) {
    setupError.textContent =
      err instanceof ApiError ? err.detail : `service unreachable: ${err}`;
  }
});

el<HTMLButtonElement>("reset").addEventListener("click", () => {
  driver?.stop();
  driver = null;
  boardPane.hidden = true;
  setupPane.hidden = false;
});
