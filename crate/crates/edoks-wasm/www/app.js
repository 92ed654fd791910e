import init, { compare, heatmap, distort, demo_image } from "../pkg/edoks_wasm.js";

const SIDE = 256;

const el = (id) => document.getElementById(id);
const cvA = el("cvA"), cvB = el("cvB"), cvMap = el("cvMap");

let reference = null; // Uint8Array RGBA, SIDE x SIDE
let pending = false, queued = false;

function paint(canvas, rgba) {
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), SIDE, SIDE), 0, 0);
}

function fmt(x) {
  if (!isFinite(x)) return "inf";
  if (x === 0) return "0";
  if (x >= 1000) return x.toExponential(2);
  return x.toPrecision(4);
}

async function refresh() {
  if (!reference) return;
  if (pending) { queued = true; return; }
  pending = true;
  el("busy").textContent = "computing…";
  // let the browser paint the busy note before the wasm call blocks
  await new Promise((r) => setTimeout(r, 0));
  try {
    const kind = el("kind").value;
    const strength = parseFloat(el("strength").value);
    const alpha = parseFloat(el("alpha").value);
    const patch = parseInt(el("patch").value, 10);

    const distorted = distort(reference, SIDE, SIDE, kind, strength);
    paint(cvA, reference);
    paint(cvB, distorted);

    const report = JSON.parse(compare(reference, distorted, SIDE, SIDE, alpha, patch));
    el("sEmd").textContent = fmt(report.emd);
    el("sOk").textContent = fmt(report.ok);
    el("sEdok").textContent = fmt(report.edok);
    el("sEdoks").textContent = fmt(report.edoks);

    const map = heatmap(reference, distorted, SIDE, SIDE, el("mapKind").value, patch);
    paint(cvMap, map);
    el("busy").textContent = "";
  } catch (e) {
    el("busy").textContent = String(e);
  } finally {
    pending = false;
    if (queued) { queued = false; refresh(); }
  }
}

function loadFile(file) {
  const img = new Image();
  img.onload = () => {
    const work = document.createElement("canvas");
    work.width = SIDE;
    work.height = SIDE;
    const ctx = work.getContext("2d");
    ctx.drawImage(img, 0, 0, SIDE, SIDE);
    reference = new Uint8Array(ctx.getImageData(0, 0, SIDE, SIDE).data.buffer.slice(0));
    URL.revokeObjectURL(img.src);
    refresh();
  };
  img.src = URL.createObjectURL(file);
}

await init();

el("generate").addEventListener("click", () => {
  reference = demo_image(SIDE, SIDE);
  refresh();
});
el("file").addEventListener("change", (e) => {
  if (e.target.files.length) loadFile(e.target.files[0]);
});
for (const id of ["kind", "mapKind", "patch"]) {
  el(id).addEventListener("change", refresh);
}
el("strength").addEventListener("input", () => {
  el("strengthVal").textContent = parseFloat(el("strength").value).toFixed(1);
  refresh();
});
el("alpha").addEventListener("input", () => {
  el("alphaVal").textContent = parseFloat(el("alpha").value).toFixed(2);
  refresh();
});

reference = demo_image(SIDE, SIDE);
refresh();
