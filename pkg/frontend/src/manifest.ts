import { z } from 'zod';

export const ManifestSchema = z
  .object({
    n_layers: z.number().int().positive(),
    hidden_dim: z.number().int().positive(),
    intermediate_dim: z.number().int().positive(),
    n_heads: z.number().int().positive(),
    vocab_size: z.number().int().positive(),
    activation: z.enum(['silu', 'gelu']),
    norm_eps: z.number().positive(),
    max_seq_len: z.number().int().positive(),
  })
  .refine((m) => m.hidden_dim % m.n_heads === 0, {
    message: 'hidden_dim must be divisible by n_heads',
  });

export type ModelManifest = z.infer<typeof ManifestSchema>;

export function parseManifest(text: string): ModelManifest {
  return ManifestSchema.parse(JSON.parse(text));
}

export function manifestJson(m: ModelManifest): string {
  // Field order matches the primary's own serializer.
  return JSON.stringify(
    {
      n_layers: m.n_layers,
      hidden_dim: m.hidden_dim,
      intermediate_dim: m.intermediate_dim,
      n_heads: m.n_heads,
      vocab_size: m.vocab_size,
      activation: m.activation,
      norm_eps: m.norm_eps,
      max_seq_len: m.max_seq_len,
    },
    null,
    2
  );
}

/** Canonical tensor-name schema of the tiny-LM container, in order. */
export function tensorSchema(m: ModelManifest): Array<[string, number[]]> {
  const h = m.hidden_dim;
  const d = m.intermediate_dim;
  const names: Array<[string, number[]]> = [
    ['embed.tokens', [m.vocab_size, h]],
    ['embed.positions', [m.max_seq_len, h]],
  ];
  for (let i = 0; i < m.n_layers; i++) {
    names.push(
      [`layers.${i}.attn_norm.weight`, [h]],
      [`layers.${i}.attn.w_q`, [h, h]],
      [`layers.${i}.attn.w_k`, [h, h]],
      [`layers.${i}.attn.w_v`, [h, h]],
      [`layers.${i}.attn.w_o`, [h, h]],
      [`layers.${i}.ffn_norm.weight`, [h]],
      [`layers.${i}.ffn.w_up`, [d, h]],
      [`layers.${i}.ffn.w_gate`, [d, h]],
      [`layers.${i}.ffn.w_down`, [h, d]]
    );
  }
  names.push(['final_norm.weight', [h]], ['output.weight', [m.vocab_size, h]]);
  return names;
}
