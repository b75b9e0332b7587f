import init, { seLimit, pointSet, ungmDemo } from "./pkg/gpq_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (v) => (Math.abs(v) < 1e-3 && v !== 0 ? v.toExponential(3) : v.toFixed(5));

function call(fn, out) {
  const res = JSON.parse(fn());
  if (res.error) {
    out.innerHTML = `<p class="error">${res.error}</p>`;
    return null;
  }
  return res;
}

function table(headers, rows) {
  const head = headers.map((h) => `<th>${h}</th>`).join("");
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${head}</tr>${body}</table>`;
}

function runLimit() {
  const out = $("lim-out");
  const res = call(() => seLimit(num("lim-kappa"), num("lim-min"), num("lim-max"), 10), out);
  if (!res) return;
  const rows = res.rows.map((r) => [r.length.toPrecision(3), ...r.weights.map(fmt), r.error.toExponential(2), r.variance.toExponential(2)]);
  rows.push(["unscented", ...res.unscented.map(fmt), "", ""]);
  out.innerHTML = table(["ℓ", "W₀", "W₊", "W₋", "max error", "variance"], rows);
}

function runPoints() {
  const out = $("pts-out");
  const canvas = $("pts-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const res = call(() => pointSet($("pts-kind").value, num("pts-count"), num("pts-length"), num("pts-jitter"), num("pts-seed")), out);
  if (!res) return;
  const span = Math.max(3, ...res.points.flat().map(Math.abs)) * 1.1;
  const sx = (x) => canvas.width / 2 + (x / span) * (canvas.width / 2);
  const sy = (y) => canvas.height / 2 - (y / span) * (canvas.height / 2);
  ctx.strokeStyle = "#ddd";
  for (const r of [1, 2, 3]) {
    ctx.beginPath();
    ctx.arc(sx(0), sy(0), (r / span) * (canvas.width / 2), 0, 2 * Math.PI);
    ctx.stroke();
  }
  const wmax = Math.max(...res.gpq_weights.map(Math.abs));
  res.points.forEach(([x, y], i) => {
    const w = res.gpq_weights[i];
    ctx.fillStyle = w >= 0 ? "#1f77b4" : "#d62728";
    ctx.beginPath();
    ctx.arc(sx(x), sy(y), 3 + 9 * Math.sqrt(Math.abs(w) / wmax), 0, 2 * Math.PI);
    ctx.fill();
  });
  const sum = res.gpq_weights.reduce((a, b) => a + b, 0);
  const rows = res.points.map(([x, y], i) => [i, fmt(x), fmt(y), fmt(res.gpq_weights[i]), res.classical_weights ? fmt(res.classical_weights[i]) : "–"]);
  out.innerHTML = `<p>${res.points.length} points, GP weight sum ${fmt(sum)}, posterior variance ${res.posterior_variance.toExponential(3)}. Marker area follows |W|; red marks negative weights.</p>` +
    table(["i", "ξ₁", "ξ₂", "GPQ weight", "classical weight"], rows);
}

function runTracking() {
  const out = $("trk-out");
  const canvas = $("trk-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const res = call(() => ungmDemo($("trk-method").value, num("trk-count"), num("trk-length"), num("trk-seed"), num("trk-steps")), out);
  if (!res) return;
  const all = [...res.truth, ...res.filtered, ...res.smoothed];
  const lo = Math.min(...all), hi = Math.max(...all);
  const n = res.truth.length;
  const sx = (k) => 10 + (k / Math.max(1, n - 1)) * (canvas.width - 20);
  const sy = (v) => canvas.height - 10 - ((v - lo) / (hi - lo || 1)) * (canvas.height - 20);
  const line = (vals, color) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    vals.forEach((v, k) => (k ? ctx.lineTo(sx(k), sy(v)) : ctx.moveTo(sx(k), sy(v))));
    ctx.stroke();
  };
  line(res.filtered, "#1f77b4");
  line(res.smoothed, "#d62728");
  ctx.fillStyle = "#000";
  res.truth.forEach((v, k) => ctx.fillRect(sx(k) - 1.5, sy(v) - 1.5, 3, 3));
  out.innerHTML = `<p>RMSE: filter ${res.filter_rmse.toFixed(3)}, smoother ${res.smoother_rmse.toFixed(3)}</p>`;
}

await init();
$("lim-run").onclick = runLimit;
$("pts-run").onclick = runPoints;
$("trk-run").onclick = runTracking;
runLimit();
runPoints();
runTracking();
