export { readGspt, writeGspt, GsptFormatError, type Tensor } from './gspt.js';
export {
  readSafetensors,
  writeSafetensors,
  decodeF16,
  encodeF16,
  SafetensorsError,
  type StTensor,
} from './safetensors.js';
export { ManifestSchema, parseManifest, manifestJson, tensorSchema, type ModelManifest } from './manifest.js';
export {
  exportCheckpoint,
  reexportContainer,
  extractFfnTriple,
  ExportError,
  type ExportSpec,
  type ExportResult,
  type NameMapping,
} from './export.js';
export { referenceForward } from './refmodel.js';
