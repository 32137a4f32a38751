import init, { threshold_curve, cap_process_paths, rearranged_profile } from "./pkg/rgg_wasm_demo.js";

const PAD = 40;

function num(id) {
  return Number(document.getElementById(id).value);
}

function axes(ctx, w, h, xr, yr, xlabel, ylabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD, 10, w - PAD - 10, h - PAD - 10);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(xlabel, w / 2, h - 8);
  ctx.fillText(`${xr[0].toPrecision(3)}`, PAD, h - PAD + 14);
  ctx.fillText(`${xr[1].toPrecision(3)}`, w - 50, h - PAD + 14);
  ctx.fillText(`${yr[1].toPrecision(3)}`, 2, 18);
  ctx.fillText(`${yr[0].toPrecision(3)}`, 2, h - PAD);
  ctx.save();
  ctx.translate(12, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  const sx = (x) => PAD + ((x - xr[0]) / (xr[1] - xr[0])) * (w - PAD - 10);
  const sy = (y) => h - PAD - ((y - yr[0]) / (yr[1] - yr[0])) * (h - PAD - 20);
  return { sx, sy };
}

function line(ctx, pts, color, step = false) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  pts.forEach(([x, y], i) => {
    if (i === 0) {
      ctx.moveTo(x, y);
    } else if (step) {
      ctx.lineTo(x, pts[i - 1][1]);
      ctx.lineTo(x, y);
    } else {
      ctx.lineTo(x, y);
    }
  });
  ctx.stroke();
}

function guarded(errId, f) {
  return () => {
    const el = document.getElementById(errId);
    el.textContent = "";
    try {
      f();
    } catch (e) {
      el.textContent = String(e.message ?? e);
    }
  };
}

function plotThresholds() {
  const rows = threshold_curve(num("tc-p"), num("tc-dmin"), num("tc-dmax"), 120);
  const canvas = document.getElementById("tc-canvas");
  const ctx = canvas.getContext("2d");
  const pts = [];
  for (let i = 0; i < rows.length; i += 4) pts.push(rows.slice(i, i + 4));
  const xs = pts.map((r) => Math.log10(r[0]));
  const ys = pts.flatMap((r) => [r[1], r[2], r[3]]);
  const lo = Math.min(...ys);
  const hi = Math.max(...ys);
  const pad = (hi - lo) * 0.05 + 1e-3;
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, [xs[0], xs[xs.length - 1]], [lo - pad, hi + pad], "log10 d", "");
  line(ctx, pts.map((r, i) => [sx(xs[i]), sy(r[1])]), "#1f77b4");
  line(ctx, pts.map((r, i) => [sx(xs[i]), sy(r[2])]), "#d62728");
  line(ctx, pts.map((r, i) => [sx(xs[i]), sy(r[3])]), "#555");
}

function plotCapPaths() {
  const n = num("cp-n");
  const etas = cap_process_paths(n, num("cp-d"), num("cp-p"), num("cp-paths"), BigInt(num("cp-seed")));
  const canvas = document.getElementById("cp-canvas");
  const ctx = canvas.getContext("2d");
  const floor = 1e-12;
  const logs = Array.from(etas, (e) => Math.log10(Math.max(e, floor)));
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, [0, n], [Math.min(...logs), 0], "k", "log10 η_k");
  ctx.globalAlpha = 0.35;
  for (let i = 0; i < logs.length; i += n + 1) {
    line(ctx, logs.slice(i, i + n + 1).map((y, k) => [sx(k), sy(y)]), "#1f77b4");
  }
  ctx.globalAlpha = 1;
}

function plotProfile() {
  const k = num("rp-k");
  const points = 401;
  const rows = rearranged_profile(k, num("rp-d"), num("rp-p"), points, BigInt(num("rp-seed")));
  const canvas = document.getElementById("rp-canvas");
  const ctx = canvas.getContext("2d");
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, [-1, 1], [0, k], "x₁", "g(x)");
  const pts = [];
  for (let i = 0; i < 2 * points; i += 2) pts.push([sx(rows[i]), sy(rows[i + 1])]);
  line(ctx, pts, "#2ca02c", true);
  const levels = Array.from(rows.slice(2 * points), (a) => a.toPrecision(4));
  document.getElementById("rp-levels").textContent = `level measures μ{g ≥ j}: ${levels.join(", ")}`;
}

await init();
document.getElementById("tc-run").onclick = guarded("tc-err", plotThresholds);
document.getElementById("cp-run").onclick = guarded("cp-err", plotCapPaths);
document.getElementById("rp-run").onclick = guarded("rp-err", plotProfile);
guarded("tc-err", plotThresholds)();
guarded("cp-err", plotCapPaths)();
guarded("rp-err", plotProfile)();
