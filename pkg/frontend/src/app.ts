// DOM wiring for the builder wizard. Thin: all state transitions live in
// state.ts and all math lives behind the HTTP API.

import { ApiClient, PairInfo } from "./api.js";
import { BuilderWizard } from "./state.js";
import { buildHeatmap, HeatmapGrid } from "./heatmap.js";

const api = new ApiClient(location.origin.replace(/:\d+$/, ":8080"));
const wizard = new BuilderWizard(api);

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}

export function renderHeatmap(grid: HeatmapGrid): HTMLElement {
  const root = el("div", "heatmap");
  if (grid.empty) {
    root.append(el("p", "empty", "no equivariant directions for this block"));
    return root;
  }
  const table = el("table") as HTMLTableElement;
  for (const row of grid.cells) {
    const tr = el("tr");
    for (const cell of row) {
      const td = el("td", cell.hatched ? "cell hatched" : "cell");
      td.style.background = cell.color;
      td.title = cell.basis >= 0 ? `basis ${cell.basis}, sign ${cell.sign}` : "zero";
      tr.append(td);
    }
    table.append(tr);
  }
  root.append(table);
  return root;
}

async function renderOptions(list: HTMLElement) {
  list.replaceChildren();
  for (const pair of wizard.addControls()) {
    const item = el("li", "option");
    const button = el("button", "add", `add ${wizard.badge(pair)}`) as HTMLButtonElement;
    button.title = wizard.phiTooltip(pair);
    button.onclick = async () => {
      const ok = await wizard.addLayer([{ id: pair.id, mult: 1 }]);
      if (!ok && wizard.state.lastRejection) {
        document.getElementById("error")!.textContent = wizard.state.lastRejection;
      }
      await refresh();
    };
    const peek = el("button", "peek", "pattern") as HTMLButtonElement;
    peek.onclick = async () => {
      const pattern = await wizard.patternFor(pair.id);
      const holder = document.getElementById("pattern")!;
      holder.replaceChildren(renderHeatmap(buildHeatmap(pattern)));
    };
    item.append(button, peek);
    list.append(item);
  }
}

async function refresh() {
  const list = document.getElementById("options")!;
  await renderOptions(list);
  document.getElementById("layers")!.textContent = JSON.stringify(wizard.state.layers);
}

export async function boot() {
  const groups = await api.groups();
  const select = document.getElementById("group") as HTMLSelectElement;
  for (const g of groups) {
    const option = document.createElement("option");
    option.value = g.name;
    option.textContent = `${g.name} (order ${g.order})`;
    select.append(option);
  }
  select.onchange = async () => {
    await wizard.chooseGroup(select.value);
    await refresh();
  };
  (document.getElementById("undo") as HTMLButtonElement).onclick = async () => {
    await wizard.undo();
    await refresh();
  };
  (document.getElementById("export") as HTMLButtonElement).onclick = async () => {
    const spec = await wizard.exportSpec();
    (document.getElementById("spec") as HTMLTextAreaElement).value = spec;
  };
  (document.getElementById("smoke") as HTMLButtonElement).onclick = async () => {
    const result = await wizard.runSmoke();
    document.getElementById("smoke-out")!.textContent =
      `invariance deviation ${result.invariance_deviation.toExponential(2)}`;
  };
}

if (typeof document !== "undefined" && document.getElementById("group")) {
  boot();
}
