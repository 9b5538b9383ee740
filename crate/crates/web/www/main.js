import init, { sweep, oracle, check } from "./pkg/varphase_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

// Plot series of {x, y} points. Lines are broken across jumps larger than
// half the vertical range, so eigenphases wrapping at ±π/2 do not smear.
function plot(canvas, series, xlabel) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) return;
  const xmin = Math.min(...pts.map((p) => p.x)), xmax = Math.max(...pts.map((p) => p.x));
  const ymin = -Math.PI / 2, ymax = Math.PI / 2;
  const X = (x) => pad + ((x - xmin) / (xmax - xmin || 1)) * (W - 2 * pad);
  const Y = (y) => H - pad - ((y - ymin) / (ymax - ymin)) * (H - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(xlabel, W / 2, H - 8);
  ctx.fillText(xmin.toFixed(2), pad, H - pad + 14);
  ctx.fillText(xmax.toFixed(2), W - pad - 24, H - pad + 14);
  ctx.fillText("π/2", 6, pad + 4);
  ctx.fillText("−π/2", 4, H - pad + 4);
  ctx.fillText("0", 20, Y(0) + 4);
  series.forEach((s, i) => {
    ctx.strokeStyle = ctx.fillStyle = s.color || COLORS[i % COLORS.length];
    if (s.dots) {
      for (const p of s.points) ctx.fillRect(X(p.x) - 2, Y(p.y) - 2, 4, 4);
    } else {
      ctx.beginPath();
      s.points.forEach((p, j) => {
        const jump = j > 0 && Math.abs(p.y - s.points[j - 1].y) > Math.PI / 2;
        j === 0 || jump ? ctx.moveTo(X(p.x), Y(p.y)) : ctx.lineTo(X(p.x), Y(p.y));
      });
      ctx.stroke();
    }
    if (s.label) ctx.fillText(s.label, W - pad - 90, pad + 14 + 14 * i);
  });
}

function guarded(statusId, f) {
  return () => {
    const status = $(statusId);
    status.className = "";
    status.textContent = "working…";
    // let the status repaint before the synchronous solve
    setTimeout(() => {
      const t0 = performance.now();
      try {
        const msg = f();
        status.textContent = `${msg} (${((performance.now() - t0) / 1000).toFixed(2)} s)`;
      } catch (e) {
        status.className = "err";
        status.textContent = String(e.message || e);
      }
    }, 10);
  };
}

function runWell() {
  const v0 = num("well-v0"), a = num("well-a"), lmax = num("well-lmax");
  const grid = { min: num("well-kmin"), max: num("well-kmax"), num: num("well-num") };
  const config = {
    engine: "scalar",
    source: { type: "square_well", v0, a, s: num("well-s") },
    lmax,
    compare_oracle: true,
    k: { grid },
  };
  const out = JSON.parse(sweep(JSON.stringify(config)));
  // one ℓ per branch: m-degenerate channels give identical curves, keep m = 0
  const byL = new Map();
  for (const row of out.oracle) {
    const m = /^l=(\d+) m=0$/.exec(row.label.trim());
    if (!m) continue;
    const l = Number(m[1]);
    if (!byL.has(l)) byL.set(l, []);
    byL.get(l).push({ x: row.k[0], y: Math.atan2(row.engine[1], row.engine[0]) / 2 });
  }
  const series = [];
  for (const [l, points] of [...byL].sort((p, q) => p[0] - q[0])) {
    const color = COLORS[l % COLORS.length];
    const exact = JSON.parse(oracle(JSON.stringify({
      oracle: { kind: "square_well", v0, a }, channel: l,
      k: { grid: { min: grid.min, max: grid.max, num: 200 } },
    })));
    series.push({ points: exact.map((r) => ({ x: r.k[0], y: r.delta })), color, label: `ℓ = ${l}` });
    series.push({ points, color, dots: true });
  }
  plot($("well-plot"), series, "k");
  return `max |Δδ| vs sharp well ${out.max_oracle_deviation.toExponential(2)} rad`;
}

function runMie() {
  const n = num("mie-n"), a = num("mie-a"), j = num("mie-j");
  const k = { grid: { min: 0.02, max: num("mie-kmax"), num: 300 } };
  const series = [[1, "M (TE)"], [-1, "N (TM)"]].map(([polarization, label], i) => ({
    label: `j = ${j} ${label}`,
    color: COLORS[i],
    points: JSON.parse(oracle(JSON.stringify({
      oracle: { kind: "dielectric_sphere", n, a }, channel: j, polarization, k,
    }))).map((r) => ({ x: r.k[0], y: r.delta })),
  }));
  plot($("mie-plot"), series, "k");
  return "done";
}

function runCheck() {
  const report = JSON.parse(check($("check-config").value));
  $("check-out").textContent = report.checks
    .map((c) => `${c.passed ? "PASS" : "FAIL"}  ${c.name.padEnd(20)} ${c.value.toExponential(2)} (tol ${c.tolerance.toExponential(0)})  ${c.message || ""}`)
    .join("\n");
  return report.passed ? "all checks pass" : "some checks failed";
}

await init();
$("well-run").onclick = guarded("well-status", runWell);
$("mie-run").onclick = guarded("mie-status", runMie);
$("check-run").onclick = guarded("check-status", runCheck);
$("mie-run").click();
