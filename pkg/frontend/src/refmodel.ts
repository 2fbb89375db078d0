/**
 * Float64 reference forward pass of the tiny pre-norm GLU-FFN transformer.
 *
 * Used as the source-ecosystem side of the export parity check: the exporter
 * writes a container, the primary engine computes logits on it, and this
 * model recomputes the same logits from the original checkpoint tensors.
 */

import type { StTensor } from './safetensors.js';
import type { ModelManifest } from './manifest.js';

type Mat = { rows: number; cols: number; data: Float64Array };

function toMat(t: StTensor): Mat {
  const [rows, cols] = t.shape.length === 2 ? t.shape : [1, t.shape[0]];
  const data = new Float64Array(t.data.length);
  for (let i = 0; i < t.data.length; i++) data[i] = t.data[i];
  return { rows, cols, data };
}

/** y = W x for one row vector x, with W stored [out, in]. */
function matvec(W: Mat, x: Float64Array): Float64Array {
  const out = new Float64Array(W.rows);
  for (let i = 0; i < W.rows; i++) {
    let acc = 0;
    const base = i * W.cols;
    for (let j = 0; j < W.cols; j++) acc += W.data[base + j] * x[j];
    out[i] = acc;
  }
  return out;
}

function rmsnorm(x: Float64Array, g: Float64Array, eps: number): Float64Array {
  let ss = 0;
  for (const v of x) ss += v * v;
  const scale = 1 / Math.sqrt(ss / x.length + eps);
  const out = new Float64Array(x.length);
  for (let i = 0; i < x.length; i++) out[i] = x[i] * scale * g[i];
  return out;
}

function silu(z: number): number {
  return z / (1 + Math.exp(-z));
}

/** Abramowitz-Stegun 7.1.26 erf approximation, |error| < 1.5e-7. */
function erf(x: number): number {
  const sign = x < 0 ? -1 : 1;
  const ax = Math.abs(x);
  const t = 1 / (1 + 0.3275911 * ax);
  const y =
    1 -
    (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t + 0.254829592) *
      t *
      Math.exp(-ax * ax);
  return sign * y;
}

function gelu(z: number): number {
  return 0.5 * z * (1 + erf(z / Math.SQRT2));
}

export function referenceForward(
  tensors: StTensor[],
  manifest: ModelManifest,
  tokens: number[]
): number[][] {
  const byName = new Map(tensors.map((t) => [t.name, toMat(t)]));
  const get = (name: string): Mat => {
    const m = byName.get(name);
    if (!m) throw new Error(`reference forward: missing tensor '${name}'`);
    return m;
  };
  const h = manifest.hidden_dim;
  const L = tokens.length;
  if (L > manifest.max_seq_len) throw new Error('sequence longer than max_seq_len');
  const headDim = h / manifest.n_heads;
  const embed = get('embed.tokens');
  const pos = get('embed.positions');
  const act = manifest.activation === 'silu' ? silu : gelu;

  // Residual stream, one Float64Array per position.
  const x: Float64Array[] = tokens.map((tok, t) => {
    if (tok < 0 || tok >= manifest.vocab_size) throw new Error(`token ${tok} out of range`);
    const row = new Float64Array(h);
    for (let j = 0; j < h; j++) row[j] = embed.data[tok * h + j] + pos.data[t * h + j];
    return row;
  });

  for (let layer = 0; layer < manifest.n_layers; layer++) {
    const gAttn = get(`layers.${layer}.attn_norm.weight`).data;
    const wq = get(`layers.${layer}.attn.w_q`);
    const wk = get(`layers.${layer}.attn.w_k`);
    const wv = get(`layers.${layer}.attn.w_v`);
    const wo = get(`layers.${layer}.attn.w_o`);

    const pre = x.map((row) => rmsnorm(row, gAttn, manifest.norm_eps));
    const q = pre.map((row) => matvec(wq, row));
    const k = pre.map((row) => matvec(wk, row));
    const v = pre.map((row) => matvec(wv, row));

    const attnOut: Float64Array[] = [];
    for (let t = 0; t < L; t++) {
      const mixed = new Float64Array(h);
      for (let head = 0; head < manifest.n_heads; head++) {
        const base = head * headDim;
        const scores = new Float64Array(t + 1);
        let max = -Infinity;
        for (let s = 0; s <= t; s++) {
          let dot = 0;
          for (let j = 0; j < headDim; j++) dot += q[t][base + j] * k[s][base + j];
          scores[s] = dot / Math.sqrt(headDim);
          if (scores[s] > max) max = scores[s];
        }
        let z = 0;
        for (let s = 0; s <= t; s++) {
          scores[s] = Math.exp(scores[s] - max);
          z += scores[s];
        }
        for (let s = 0; s <= t; s++) {
          const w = scores[s] / z;
          for (let j = 0; j < headDim; j++) mixed[base + j] += w * v[s][base + j];
        }
      }
      attnOut.push(matvec(wo, mixed));
    }
    for (let t = 0; t < L; t++) for (let j = 0; j < h; j++) x[t][j] += attnOut[t][j];

    const gFfn = get(`layers.${layer}.ffn_norm.weight`).data;
    const wUp = get(`layers.${layer}.ffn.w_up`);
    const wGate = get(`layers.${layer}.ffn.w_gate`);
    const wDown = get(`layers.${layer}.ffn.w_down`);
    for (let t = 0; t < L; t++) {
      const preF = rmsnorm(x[t], gFfn, manifest.norm_eps);
      const u = matvec(wUp, preF);
      const g = matvec(wGate, preF);
      for (let j = 0; j < u.length; j++) u[j] *= act(g[j]);
      const y = matvec(wDown, u);
      for (let j = 0; j < h; j++) x[t][j] += y[j];
    }
  }

  const gFinal = get('final_norm.weight').data;
  const wOut = get('output.weight');
  return x.map((row) => Array.from(matvec(wOut, rmsnorm(row, gFinal, manifest.norm_eps))));
}
