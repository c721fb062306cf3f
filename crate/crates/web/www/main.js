import init, { solve, replay, mdp } from "./pkg/rlgl_web.js";

const $ = (id) => document.getElementById(id);
const PALETTE = ["#eee", "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#999"];

function graphArgs() {
  const preset = $("preset").value;
  const text = preset === "custom" ? $("edges").value : preset;
  return [text, $("undirected").checked, Number($("damping").value), $("schedule").value.trim()];
}

function fail(el, e) {
  el.innerHTML = "";
  const d = document.createElement("div");
  d.className = "err";
  d.textContent = String(e.message ?? e);
  el.appendChild(d);
}

// log10 residual against cost, both curves on shared axes
function drawCurves(canvas, curves) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pts = curves.flatMap((c) => c.points).filter(([, r]) => r > 0);
  if (!pts.length) return;
  const xmax = Math.max(...pts.map(([x]) => x));
  const ys = pts.map(([, r]) => Math.log10(r));
  const ymin = Math.min(...ys), ymax = Math.max(...ys) + 1e-9;
  const pad = 40;
  const X = (x) => pad + (x / xmax) * (w - 2 * pad);
  const Y = (r) => h - pad - ((Math.log10(r) - ymin) / (ymax - ymin)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.fillText(`1e${ymax.toFixed(0)}`, 2, pad + 4);
  ctx.fillText(`1e${ymin.toFixed(0)}`, 2, h - pad);
  ctx.fillText(`cost ${xmax.toFixed(0)}`, w - pad - 60, h - pad + 16);
  for (const c of curves) {
    ctx.strokeStyle = c.color;
    ctx.beginPath();
    c.points.filter(([, r]) => r > 0).forEach(([x, r], i) => (i ? ctx.lineTo(X(x), Y(r)) : ctx.moveTo(X(x), Y(r))));
    ctx.stroke();
  }
}

$("solve").onclick = () => {
  const out = $("solve-out");
  try {
    const r = JSON.parse(solve(...graphArgs(), Number($("eps").value)));
    drawCurves($("curve"), [
      { points: r.rlgl.points, color: "#c33" },
      { points: r.power.points, color: "#36c" },
    ]);
    const rows = r.pi.slice(0, 40).map((v, i) =>
      `<tr><td>${i}</td><td>${v.toExponential(8)}</td><td>${r.exact ? Math.abs(v - r.exact[i]).toExponential(1) : ""}</td></tr>`);
    const last = (c) => (c.points.length ? c.points[c.points.length - 1][0] : 0);
    out.innerHTML =
      `<p>n = ${r.n}. cost to converge: rlgl ${last(r.rlgl).toFixed(0)}${r.rlgl.converged ? "" : " (not converged)"}, ` +
      `power ${last(r.power).toFixed(0)}${r.power.converged ? "" : " (not converged)"}</p>` +
      `<table><tr><th>node</th><th>estimate</th><th>|error|</th></tr>${rows.join("")}</table>` +
      (r.n > 40 ? `<p>first 40 of ${r.n} nodes</p>` : "");
  } catch (e) {
    fail(out, e);
  }
};

// replay state: every frame up to the current step, recomputed on demand
let frames = [];
let shown = 0;

function drawFrame() {
  const canvas = $("bars");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const f = frames[shown];
  if (!f) return;
  const n = f.cash.length;
  const bw = (w - 20) / n;
  const mid = h / 2;
  const scale = Math.max(1e-300, ...f.cash.map(Math.abs), ...f.history.map(Math.abs));
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(0, mid);
  ctx.lineTo(w, mid);
  ctx.stroke();
  for (let i = 0; i < n; i++) {
    const x = 10 + i * bw;
    ctx.fillStyle = f.green.includes(i) ? "#2a2" : "#c33";
    const c = (f.cash[i] / scale) * (mid - 20);
    ctx.fillRect(x + 2, mid - Math.max(c, 0), bw / 2 - 3, Math.abs(c));
    ctx.fillStyle = "#36c";
    const hh = (f.history[i] / scale) * (mid - 20);
    ctx.fillRect(x + bw / 2, mid - Math.max(hh, 0), bw / 2 - 3, Math.abs(hh));
    if (n <= 40) {
      ctx.fillStyle = "#555";
      ctx.fillText(String(i), x + bw / 2 - 4, h - 4);
    }
  }
  const cashL1 = f.cash.reduce((s, c) => s + Math.abs(c), 0);
  $("step-info").textContent =
    `t = ${f.t}, green ${f.green.length ? "{" + f.green.join(",") + "}" : "none"}, cash l1 = ${cashL1.toExponential(3)}` +
    (f.estimate ? "" : ", total history is zero: no estimate") + "  (red/green: cash, blue: history)";
}

function recompute(steps) {
  try {
    frames = JSON.parse(replay(...graphArgs(), Number($("start").value), steps));
    shown = Math.min(steps, frames.length - 1);
    drawFrame();
  } catch (e) {
    fail($("step-info"), e);
  }
}

$("reset").onclick = () => recompute(0);
$("step").onclick = () => recompute(shown + 1);

$("mdp").onclick = () => {
  const out = $("mdp-out");
  try {
    const sizes = $("sizes").value.split(",").map(Number);
    const r = JSON.parse(mdp(...sizes, Number($("p").value), Number($("q").value), Number($("mdp-eps").value),
      Number($("nz1").value), Number($("nz2").value)));
    const canvas = $("policy");
    const ctx = canvas.getContext("2d");
    const { width: w, height: h } = canvas;
    ctx.clearRect(0, 0, w, h);
    const cw = w / r.n_z1, ch = h / r.n_z2;
    for (let i = 0; i < r.n_z1; i++) {
      for (let j = 0; j < r.n_z2; j++) {
        ctx.fillStyle = PALETTE[r.actions[i * r.n_z2 + j]];
        ctx.fillRect(i * cw, h - (j + 1) * ch, cw + 1, ch + 1);
      }
    }
    // trajectory: z1 counts down towards zero
    ctx.strokeStyle = "#000";
    ctx.beginPath();
    r.trajectory.forEach(([, z1, z2], k) => {
      const x = (z1 / r.z1_max) * w, y = h - ((z2 + 2) / 4) * h;
      k ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
    $("mdp-legend").innerHTML = PALETTE.slice(1).map((c, k) => `<span style="background:${c}"></span>a${k + 1}`).join("") +
      " (x: log10 of cash over eps, y: block 2 minus block 3 share)";
    const seq = r.trajectory.map(([a]) => "a" + a).join(" ");
    out.innerHTML = `<p>policy cost ${r.kappa.toFixed(0)}, all nodes ${r.kappa_all_nodes.toFixed(0)}, ` +
      `ratio ${(r.kappa_all_nodes / r.kappa).toFixed(2)}</p><p style="font-family:monospace">${seq}</p>`;
  } catch (e) {
    fail(out, e);
  }
};

await init();
recompute(0);
