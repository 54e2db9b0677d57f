import init, { stabilize_grid, soc_trace, directed_medians } from "./pkg/arw_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(id, f) {
  try {
    f();
  } catch (e) {
    $(id).textContent = "error: " + e;
  }
}

function drawGrid() {
  const side = num("g-side");
  const mu = num("g-mu");
  const cap = Math.ceil(100 * side * side * Math.max(1, mu));
  const grid = stabilize_grid(side, mu, num("g-lambda"), num("g-seed"), cap);
  const states = grid.states();
  const odo = grid.odometer();
  const ctx = $("g-canvas").getContext("2d");
  const cell = $("g-canvas").width / side;
  const maxOdo = Math.max(1, ...odo);
  const sleeping = states.filter((s) => s < 0).length;
  ctx.clearRect(0, 0, $("g-canvas").width, $("g-canvas").height);
  for (let i = 0; i < states.length; i++) {
    const x = i % side;
    const y = Math.floor(i / side);
    if ($("g-odo").checked) {
      const t = Math.round(255 * Math.sqrt(odo[i] / maxOdo));
      ctx.fillStyle = `rgb(${t},${Math.round(t * 0.6)},${255 - t})`;
    } else if (states[i] < 0) {
      ctx.fillStyle = "#3366cc";
    } else if (states[i] > 0) {
      ctx.fillStyle = "#dd3322";
    } else {
      ctx.fillStyle = "#f4f4f4";
    }
    ctx.fillRect(x * cell, y * cell, Math.ceil(cell), Math.ceil(cell));
  }
  $("g-out").textContent =
    `${grid.stable ? "stable" : "cap reached"}; topplings ${grid.topplings}; ` +
    `sleeping ${sleeping} of ${side * side} (density ${(sleeping / (side * side)).toFixed(4)})`;
  grid.free();
}

function plot(canvas, xs, ys, opts) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  const h = canvas.height;
  const pad = 36;
  const xmax = Math.max(...xs);
  const xmin = Math.min(...xs);
  const ymax = Math.max(opts.ymax ?? 0, ...ys);
  const sx = (x) => pad + ((x - xmin) / Math.max(1e-12, xmax - xmin)) * (w - 2 * pad);
  const sy = (y) => h - pad - (y / Math.max(1e-12, ymax)) * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px monospace";
  ctx.fillText(ymax.toPrecision(3), 2, pad + 4);
  ctx.fillText("0", 2, h - pad);
  ctx.fillText(String(xmin), pad, h - pad + 14);
  ctx.fillText(String(xmax), w - pad - 30, h - pad + 14);
  if (opts.guide !== undefined) {
    ctx.strokeStyle = "#cc8800";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, sy(opts.guide));
    ctx.lineTo(w - pad, sy(opts.guide));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  ctx.strokeStyle = "#2255aa";
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
}

function drawSoc() {
  const pairs = soc_trace(num("s-l"), num("s-lambda"), num("s-add"), num("s-seed"));
  const xs = [];
  const ys = [];
  for (let i = 0; i < pairs.length; i += 2) {
    xs.push(pairs[i]);
    ys.push(pairs[i + 1]);
  }
  plot($("s-canvas"), xs, ys, { ymax: 1 });
  const tail = ys.slice(Math.floor(ys.length * 0.8));
  const mean = tail.reduce((a, b) => a + b, 0) / Math.max(1, tail.length);
  $("s-out").textContent = `density over the last 20% of samples: ${mean.toFixed(4)}`;
}

function drawDirected() {
  const l = num("d-l");
  const mus = [];
  for (let mu = 0.05; mu <= 1.5001; mu += 0.05) mus.push(Number(mu.toFixed(2)));
  const med = directed_medians(l, num("d-lambda"), Float64Array.from(mus), num("d-reps"), num("d-seed"));
  plot($("d-canvas"), mus, Array.from(med), { guide: Math.sqrt(l) });
  const first = mus.find((_, i) => med[i] > Math.sqrt(l));
  $("d-out").textContent =
    `median N_L against μ; dashed line at √L. ` +
    (first === undefined ? "no μ above √L" : `first μ with median above √L: ${first}`);
}

await init();
$("g-run").onclick = () => report("g-out", drawGrid);
$("g-odo").onchange = () => report("g-out", drawGrid);
$("s-run").onclick = () => report("s-out", drawSoc);
$("d-run").onclick = () => report("d-out", drawDirected);
report("g-out", drawGrid);
