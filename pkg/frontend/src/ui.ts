// DOM rendering of the view model. Rendering only: every number and label
// shown here arrived from the server unchanged.

import { degreeBars, feedItems, type PlayViewModel } from "./viewmodel.js";

export interface InputHandlers {
  onUtterance: (text: string) => void;
  onIntensity: (variable: string, x: number) => void;
  onMove: (zone: string) => void;
}

const CAUSE_LABELS: Record<string, string> = {
  stated: "stated",
  rule: "rule",
  notp: "NOTP",
  "bracket-inserted": "bracket",
  matrix: "matrix",
  agent: "agent",
};

export class PlayUi {
  private feed: HTMLElement;
  private stepBadge: HTMLElement;
  private statusBanner: HTMLElement;
  private bars: HTMLElement;
  private heat: HTMLElement;
  private agentsBox: HTMLElement;
  private errorBox: HTMLElement;
  private utterance: HTMLInputElement;
  private sayButton: HTMLButtonElement;
  private sliders: HTMLElement;
  private moves: HTMLElement;
  private slidersBuilt = false;

  constructor(root: Document, private readonly handlers: InputHandlers,
              private readonly zones: string[]) {
    this.feed = must(root, "#feed");
    this.stepBadge = must(root, "#step-badge");
    this.statusBanner = must(root, "#status-banner");
    this.bars = must(root, "#degree-bars");
    this.heat = must(root, "#matrix-heat");
    this.agentsBox = must(root, "#agents");
    this.errorBox = must(root, "#errors");
    this.utterance = must(root, "#utterance") as HTMLInputElement;
    this.sayButton = must(root, "#say") as HTMLButtonElement;
    this.sliders = must(root, "#sliders");
    this.moves = must(root, "#moves");

    this.sayButton.addEventListener("click", () => this.submitUtterance());
    this.utterance.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") this.submitUtterance();
    });
    for (const zone of zones) {
      const button = root.createElement("button");
      button.textContent = zone;
      button.className = "move-button";
      button.addEventListener("click", () => this.handlers.onMove(zone));
      this.moves.appendChild(button);
    }
  }

  private submitUtterance(): void {
    this.handlers.onUtterance(this.utterance.value);
    this.utterance.value = "";
  }

  render(vm: PlayViewModel): void {
    this.renderBanner(vm);
    this.renderFeed(vm);
    this.stepBadge.textContent = vm.step ? `${vm.scene} / ${vm.step} @ t=${vm.clock}` : "...";
    this.renderBars(vm);
    this.renderHeat(vm);
    this.renderAgents(vm);
    this.errorBox.textContent = vm.lastError ?? "";
    const disabled = vm.connection !== "open" || vm.sessionStatus === "ended";
    this.utterance.disabled = disabled;
    this.sayButton.disabled = disabled;
    for (const el of Array.from(this.sliders.querySelectorAll("input"))) {
      (el as HTMLInputElement).disabled = disabled;
    }
    for (const el of Array.from(this.moves.querySelectorAll("button"))) {
      (el as HTMLButtonElement).disabled = disabled;
    }
  }

  private renderBanner(vm: PlayViewModel): void {
    if (vm.connection === "open") {
      this.statusBanner.textContent =
        vm.sessionStatus === "ended" ? "the story has ended" : "";
      this.statusBanner.className = vm.sessionStatus === "ended" ? "banner ended" : "banner hidden";
    } else {
      this.statusBanner.textContent =
        vm.connection === "closed" ? "disconnected, retrying..." : "connecting...";
      this.statusBanner.className = "banner warning";
    }
  }

  private renderFeed(vm: PlayViewModel): void {
    this.feed.replaceChildren();
    for (const item of feedItems(vm)) {
      const row = this.feed.ownerDocument.createElement("div");
      row.className = item.kind === "pending" ? "feed-row pending" : "feed-row";
      if (item.cause) {
        const badge = this.feed.ownerDocument.createElement("span");
        badge.className = `badge badge-${item.cause}`;
        badge.textContent = CAUSE_LABELS[item.cause] ?? item.cause;
        row.appendChild(badge);
      }
      const text = this.feed.ownerDocument.createElement("span");
      text.textContent = item.text;
      row.appendChild(text);
      this.feed.appendChild(row);
    }
    this.feed.scrollTop = this.feed.scrollHeight;
  }

  private renderBars(vm: PlayViewModel): void {
    this.bars.replaceChildren();
    const doc = this.bars.ownerDocument;
    for (const variableId of Object.keys(vm.variables)) {
      const group = doc.createElement("div");
      group.className = "bar-group";
      const title = doc.createElement("h4");
      title.textContent = variableId;
      group.appendChild(title);
      for (const [term, degree] of degreeBars(vm, variableId)) {
        const row = doc.createElement("div");
        row.className = "bar-row";
        const label = doc.createElement("span");
        label.textContent = term;
        const track = doc.createElement("div");
        track.className = "bar-track";
        const fill = doc.createElement("div");
        fill.className = "bar-fill";
        fill.style.width = `${Math.round(degree * 100)}%`;
        fill.dataset.degree = degree.toFixed(4);
        track.appendChild(fill);
        row.append(label, track);
        group.appendChild(row);
      }
      this.bars.appendChild(group);
    }
    if (!this.slidersBuilt && Object.keys(vm.variables).length > 0) {
      this.buildSliders(vm);
      this.slidersBuilt = true;
    }
  }

  private buildSliders(vm: PlayViewModel): void {
    const doc = this.sliders.ownerDocument;
    for (const variableId of Object.keys(vm.variables)) {
      const row = doc.createElement("label");
      row.className = "slider-row";
      row.textContent = variableId;
      const input = doc.createElement("input");
      input.type = "range";
      input.min = "0";
      input.max = "1";
      input.step = "0.05";
      input.value = "0";
      input.addEventListener("change", () => {
        this.handlers.onIntensity(variableId, Number(input.value));
      });
      row.appendChild(input);
      this.sliders.appendChild(row);
    }
  }

  private renderHeat(vm: PlayViewModel): void {
    this.heat.replaceChildren();
    if (!vm.matrix) {
      this.heat.className = "hidden";
      return;
    }
    this.heat.className = "";
    const doc = this.heat.ownerDocument;
    const table = doc.createElement("table");
    table.className = "heat-table";
    const head = doc.createElement("tr");
    head.appendChild(doc.createElement("th"));
    for (const col of vm.matrix.cols) {
      const th = doc.createElement("th");
      th.textContent = col;
      head.appendChild(th);
    }
    table.appendChild(head);
    const byKey = new Map(vm.matrix.cells.map((c) => [`${c.row}|${c.col}`, c]));
    for (const row of vm.matrix.rows) {
      const tr = doc.createElement("tr");
      const th = doc.createElement("th");
      th.textContent = row;
      tr.appendChild(th);
      for (const col of vm.matrix.cols) {
        const cell = byKey.get(`${row}|${col}`);
        const td = doc.createElement("td");
        const score = cell?.score ?? 0;
        td.style.backgroundColor = `rgba(200, 60, 30, ${score})`;
        td.title = cell ? `${cell.actions.join(" & ")} (${score.toFixed(2)})` : "";
        td.textContent = score.toFixed(2);
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    this.heat.appendChild(table);
  }

  private renderAgents(vm: PlayViewModel): void {
    this.agentsBox.replaceChildren();
    const doc = this.agentsBox.ownerDocument;
    for (const [character, snapshot] of Object.entries(vm.agents)) {
      const row = doc.createElement("div");
      row.className = "agent-row";
      const selected = snapshot.selected
        ? `${snapshot.selected} -> ${snapshot.payload.join(", ")}`
        : "idle";
      row.textContent = `${character}: ${selected}`;
      this.agentsBox.appendChild(row);
    }
  }
}

function must(root: Document, selector: string): HTMLElement {
  const el = root.querySelector(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el as HTMLElement;
}
