import { readGspt, writeGspt, type Tensor } from './gspt.js';
import { readSafetensors, type StTensor } from './safetensors.js';
import { tensorSchema, manifestJson, type ModelManifest } from './manifest.js';

export class ExportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'ExportError';
  }
}

/**
 * Name-mapping table: target (container schema) name -> source tensor name.
 * Kept as data so new source model families need no code changes.
 */
export type NameMapping = Record<string, string>;

export interface ExportSpec {
  /** Parsed safetensors contents of the source checkpoint. */
  source: StTensor[];
  /** Target-name -> source-name table; identity mapping if omitted. */
  mapping?: NameMapping;
  manifest: ModelManifest;
}

export interface ExportResult {
  container: Buffer;
  manifestJson: string;
}

function dimsEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

/**
 * Converts a safetensors checkpoint of a matching tiny architecture into the
 * GSPT container + manifest. Every schema tensor must be mapped exactly once;
 * shapes are validated against the manifest; data is downcast to f32
 * (round-to-nearest-even happens at safetensors read for F16 sources, which
 * upcast exactly, and at Float32Array assignment for anything wider).
 */
export function exportCheckpoint(spec: ExportSpec): ExportResult {
  const byName = new Map(spec.source.map((t) => [t.name, t]));
  const schema = tensorSchema(spec.manifest);
  const mapping = spec.mapping ?? Object.fromEntries(schema.map(([name]) => [name, name]));

  const mappedSources = new Set<string>();
  const tensors: Tensor[] = [];
  for (const [target, dims] of schema) {
    const sourceName = mapping[target];
    if (sourceName === undefined) {
      throw new ExportError(`mapping has no entry for schema tensor '${target}'`);
    }
    if (mappedSources.has(sourceName)) {
      throw new ExportError(`source tensor '${sourceName}' mapped more than once`);
    }
    mappedSources.add(sourceName);
    const src = byName.get(sourceName);
    if (!src) {
      throw new ExportError(`source checkpoint is missing tensor '${sourceName}' (for '${target}')`);
    }
    if (!dimsEqual(src.shape, dims)) {
      throw new ExportError(
        `tensor '${target}': source shape [${src.shape}] does not match expected [${dims}]`
      );
    }
    tensors.push({ name: target, dims, data: src.data });
  }
  return { container: writeGspt(tensors), manifestJson: manifestJson(spec.manifest) };
}

/** Re-serializes a GSPT container; byte-identical for valid input. */
export function reexportContainer(container: Buffer): Buffer {
  return writeGspt(readGspt(container));
}

/**
 * Pulls one layer's GLU FFN weight triple (w_up, w_gate, w_down) out of a
 * full container into a standalone container.
 */
export function extractFfnTriple(container: Buffer, manifest: ModelManifest, layer: number): Buffer {
  if (layer < 0 || layer >= manifest.n_layers) {
    throw new ExportError(`layer ${layer} out of range (model has ${manifest.n_layers})`);
  }
  const byName = new Map(readGspt(container).map((t) => [t.name, t]));
  const h = manifest.hidden_dim;
  const d = manifest.intermediate_dim;
  const triple: Array<[string, number[]]> = [
    [`layers.${layer}.ffn.w_up`, [d, h]],
    [`layers.${layer}.ffn.w_gate`, [d, h]],
    [`layers.${layer}.ffn.w_down`, [h, d]],
  ];
  const tensors: Tensor[] = [];
  for (const [name, dims] of triple) {
    const t = byName.get(name);
    if (!t) {
      throw new ExportError(`layer ${layer} has no GLU FFN weights ('${name}' missing)`);
    }
    if (!dimsEqual(t.dims, dims)) {
      throw new ExportError(`tensor '${name}': shape [${t.dims}] is not the expected [${dims}]`);
    }
    tensors.push(t);
  }
  return writeGspt(tensors);
}
