import init, { solve, dual_dag, semigroup_curve } from "./pkg/stein_dual_web.js";

const $ = (id) => document.getElementById(id);

const DEFAULTS = {
  ou: ["", "3", "0.8"],
  gamma: ["r=2,lambda=1", "3", "1.5"],
  beta: ["a=2,b=3", "3", "0.8"],
  dirichlet: ["a1=1,a2=1,a3=1", "1,1", "0.3,0.4"],
  multi_ou: ["dim=2,sigma_1_2=1/2", "2,2", "0.5,-0.5"],
};

function target() {
  return [$("family").value, $("params").value, $("monomial").value];
}

function report(el, f) {
  el.classList.remove("error");
  try {
    return f();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
    return null;
  }
}

function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.points.flatMap(([x, y, e = 0]) => [[x, y - e], [x, y + e]]));
  if (pts.length === 0) return;
  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const [x, y] of pts) {
    x0 = Math.min(x0, x); x1 = Math.max(x1, x);
    y0 = Math.min(y0, y); y1 = Math.max(y1, y);
  }
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const pad = 40;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, pad); ctx.lineTo(pad, h - pad); ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillText(y1.toPrecision(4), 2, pad);
  ctx.fillText(y0.toPrecision(4), 2, h - pad);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 16);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - pad + 16);
  if (y0 < 0 && y1 > 0) {
    ctx.strokeStyle = "#ddd";
    ctx.beginPath(); ctx.moveTo(pad, sy(0)); ctx.lineTo(w - pad, sy(0)); ctx.stroke();
  }

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    if (s.dots) {
      for (const [x, y, e = 0] of s.points) {
        ctx.beginPath(); ctx.moveTo(sx(x), sy(y - e)); ctx.lineTo(sx(x), sy(y + e)); ctx.stroke();
        ctx.beginPath(); ctx.arc(sx(x), sy(y), 2.5, 0, 2 * Math.PI); ctx.fill();
      }
    } else {
      ctx.setLineDash(s.dashed ? [5, 4] : []);
      ctx.beginPath();
      s.points.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
}

function runSolve() {
  const out = $("solve-out");
  const r = report(out, () => JSON.parse(solve(...target())));
  if (!r) return;
  out.textContent = `f_h = ${r.f_h}\nE h(Z) = ${r.moment}`;
  const canvas = $("solve-plot");
  if (r.curve) {
    canvas.hidden = false;
    plot(canvas, [{ color: "#1565c0", points: r.curve.x.map((x, i) => [x, r.curve.f_h[i]]) }]);
  } else {
    canvas.hidden = true;
    out.textContent += "\n(plot shown for one-dimensional targets only)";
  }
}

function runDag() {
  const out = $("dag-out");
  const r = report(out, () => JSON.parse(dual_dag(...target())));
  if (!r) return;
  const targets = r.nodes.map(() => []);
  for (const e of r.edges) targets[e.from].push(`${r.nodes[e.to].label}: ${e.weight}`);
  const rows = r.nodes.map((n, i) =>
    `<tr><td>${n.label}</td><td>${n.exit_rate ?? "absorbing"}</td><td>${n.occupancy ?? ""}</td>` +
    `<td>${n.absorption}</td><td>${targets[i].join(", ")}</td></tr>`);
  out.innerHTML =
    "<table><tr><th>state</th><th>exit rate</th><th>occupancy</th><th>absorption</th><th>jump weights</th></tr>" +
    rows.join("") + "</table>";
}

function runCurve() {
  const out = $("curve-out");
  const r = report(out, () =>
    JSON.parse(semigroup_curve(...target(), $("x").value, Number($("tmax").value),
      Number($("samples").value), Number($("seed").value))));
  if (!r) return;
  const last = r.t.length - 1;
  out.textContent =
    `t = ${r.t[last]}: exact ${r.exact[last].toPrecision(6)}, simulated ` +
    `${r.estimate[last].toPrecision(6)} ± ${r.std_error[last].toPrecision(2)}, stationary ${r.limit.toPrecision(6)}`;
  plot($("curve-plot"), [
    { color: "#1565c0", points: r.t.map((t, i) => [t, r.exact[i]]) },
    { color: "#999", dashed: true, points: [[0, r.limit], [r.t[last], r.limit]] },
    { color: "#c62828", dots: true, points: r.t.map((t, i) => [t, r.estimate[i], 2 * r.std_error[i]]) },
  ]);
}

$("family").addEventListener("change", () => {
  const [params, monomial, x] = DEFAULTS[$("family").value];
  $("params").value = params;
  $("monomial").value = monomial;
  $("x").value = x;
});
$("solve").addEventListener("click", runSolve);
$("dag").addEventListener("click", runDag);
$("curve").addEventListener("click", runCurve);

await init();
runSolve();
runDag();
runCurve();
