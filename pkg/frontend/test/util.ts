import { tensorSchema, type ModelManifest } from '../src/manifest.js';
import type { StTensor } from '../src/safetensors.js';

export function makeManifest(overrides: Partial<ModelManifest> = {}): ModelManifest {
  return {
    n_layers: 2,
    hidden_dim: 16,
    intermediate_dim: 32,
    n_heads: 2,
    vocab_size: 256,
    activation: 'silu',
    norm_eps: 1e-6,
    max_seq_len: 64,
    ...overrides,
  };
}

/** mulberry32: tiny deterministic PRNG for test fixtures. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Randomly initialized checkpoint with the standard tensor schema. */
export function randomCheckpoint(m: ModelManifest, seed: number): StTensor[] {
  const rand = mulberry32(seed);
  return tensorSchema(m).map(([name, shape]) => {
    const n = shape.reduce((a, b) => a * b, 1);
    const data = new Float32Array(n);
    if (name.endsWith('norm.weight')) {
      data.fill(1);
    } else {
      const scale =
        name.startsWith('embed.') || name === 'output.weight'
          ? 0.02
          : 1 / Math.sqrt(shape[shape.length - 1]);
      for (let i = 0; i < n; i++) data[i] = (2 * rand() - 1) * scale;
    }
    return { name, dtype: 'F32' as const, shape, data };
  });
}
