/**
 * Minimal safetensors reader/writer.
 *
 * Layout: u64 LE header length, JSON header mapping tensor name to
 * { dtype, shape, data_offsets: [begin, end] } (offsets relative to the
 * start of the data section), then the raw tensor data.
 *
 * Only F32 and F16 are accepted on read; F16 is upcast exactly to f32.
 * Writing always emits F32 unless F16 is requested.
 */

export class SafetensorsError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'SafetensorsError';
  }
}

export interface StTensor {
  name: string;
  dtype: 'F32' | 'F16';
  shape: number[];
  data: Float32Array; // always upcast to f32 in memory
}

interface HeaderEntry {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Exact f16 -> f64 upcast (every f16 value is representable). */
export function decodeF16(bits: number): number {
  const sign = bits & 0x8000 ? -1 : 1;
  const exp = (bits >> 10) & 0x1f;
  const frac = bits & 0x3ff;
  if (exp === 0) return sign * frac * Math.pow(2, -24);
  if (exp === 31) return frac ? NaN : sign * Infinity;
  return sign * (1024 + frac) * Math.pow(2, exp - 25);
}

/** f64 -> f16 bits, round-to-nearest-even. */
export function encodeF16(value: number): number {
  const f32 = new Float32Array(1);
  const u32 = new Uint32Array(f32.buffer);
  f32[0] = value;
  const x = u32[0];
  const sign = (x >>> 16) & 0x8000;
  let exp = (x >>> 23) & 0xff;
  let frac = x & 0x7fffff;
  if (exp === 255) return sign | 0x7c00 | (frac ? 0x200 : 0);
  // Rebias; handle subnormals and rounding via the standard shift trick.
  let e = exp - 127 + 15;
  if (e >= 31) return sign | 0x7c00; // overflow to infinity
  if (e <= 0) {
    if (e < -10) return sign;
    frac |= 0x800000;
    const shift = 14 - e;
    const half = 1 << (shift - 1);
    const rounded = (frac + half - 1 + ((frac >> shift) & 1)) >> shift;
    return sign | rounded;
  }
  const half = 0x1000;
  frac = frac + half - 1 + ((frac >> 13) & 1);
  if (frac & 0x800000) {
    frac = 0;
    e += 1;
    if (e >= 31) return sign | 0x7c00;
  }
  return sign | (e << 10) | (frac >> 13);
}

export function writeSafetensors(tensors: StTensor[]): Buffer {
  const header: Record<string, HeaderEntry> = {};
  const payloads: Buffer[] = [];
  let offset = 0;
  for (const t of tensors) {
    if (elementCount(t.shape) !== t.data.length) {
      throw new SafetensorsError(
        `tensor '${t.name}': shape [${t.shape}] does not match data length ${t.data.length}`
      );
    }
    const bytesPer = t.dtype === 'F32' ? 4 : 2;
    const buf = Buffer.alloc(bytesPer * t.data.length);
    for (let i = 0; i < t.data.length; i++) {
      if (t.dtype === 'F32') buf.writeFloatLE(t.data[i], 4 * i);
      else buf.writeUInt16LE(encodeF16(t.data[i]), 2 * i);
    }
    header[t.name] = { dtype: t.dtype, shape: t.shape, data_offsets: [offset, offset + buf.length] };
    offset += buf.length;
    payloads.push(buf);
  }
  const headerJson = Buffer.from(JSON.stringify(header), 'utf-8');
  const lenBuf = Buffer.alloc(8);
  lenBuf.writeBigUInt64LE(BigInt(headerJson.length), 0);
  return Buffer.concat([lenBuf, headerJson, ...payloads]);
}

export function readSafetensors(buf: Buffer): StTensor[] {
  if (buf.length < 8) throw new SafetensorsError('file too short for header length');
  const headerLen = Number(buf.readBigUInt64LE(0));
  if (8 + headerLen > buf.length) throw new SafetensorsError('header extends past end of file');
  let header: Record<string, HeaderEntry>;
  try {
    header = JSON.parse(buf.toString('utf-8', 8, 8 + headerLen));
  } catch (e) {
    throw new SafetensorsError(`header is not valid JSON: ${e}`);
  }
  const dataStart = 8 + headerLen;
  const tensors: StTensor[] = [];
  for (const [name, entry] of Object.entries(header)) {
    if (name === '__metadata__') continue;
    const { dtype, shape, data_offsets: offs } = entry;
    if (dtype !== 'F32' && dtype !== 'F16') {
      throw new SafetensorsError(`tensor '${name}': unsupported dtype '${dtype}' (need F32 or F16)`);
    }
    const n = elementCount(shape);
    const bytesPer = dtype === 'F32' ? 4 : 2;
    if (offs[1] - offs[0] !== bytesPer * n) {
      throw new SafetensorsError(`tensor '${name}': data_offsets inconsistent with shape`);
    }
    if (dataStart + offs[1] > buf.length) {
      throw new SafetensorsError(`tensor '${name}': data extends past end of file`);
    }
    const data = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      data[i] =
        dtype === 'F32'
          ? buf.readFloatLE(dataStart + offs[0] + 4 * i)
          : decodeF16(buf.readUInt16LE(dataStart + offs[0] + 2 * i));
    }
    tensors.push({ name, dtype, shape, data });
  }
  return tensors;
}
