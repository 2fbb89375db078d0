/**
 * GSPT binary tensor container, mirroring the Python reader/writer.
 *
 * Byte layout (all integers little-endian):
 *
 *     magic   4 bytes  "GSPT"
 *     version u32      1
 *     count   u32      number of tensors
 *     per tensor:
 *         name_len u32
 *         name     UTF-8 bytes
 *         rank     u32
 *         dims     rank x u64
 *         dtype    u32   (0 = float32 LE, the only tag in v1)
 *         payload  4 * prod(dims) bytes, float32 LE
 */

const MAGIC = 'GSPT';
const VERSION = 1;
const DTYPE_F32 = 0;

export interface Tensor {
  name: string;
  dims: number[];
  data: Float32Array;
}

export class GsptFormatError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} (at byte ${offset})`);
    this.name = 'GsptFormatError';
  }
}

function elementCount(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

export function writeGspt(tensors: Tensor[]): Buffer {
  const seen = new Set<string>();
  for (const t of tensors) {
    if (seen.has(t.name)) throw new Error(`duplicate tensor name '${t.name}'`);
    seen.add(t.name);
    if (elementCount(t.dims) !== t.data.length) {
      throw new Error(
        `tensor '${t.name}': dims [${t.dims}] do not match data length ${t.data.length}`
      );
    }
  }
  const parts: Buffer[] = [];
  const head = Buffer.alloc(12);
  head.write(MAGIC, 0, 'ascii');
  head.writeUInt32LE(VERSION, 4);
  head.writeUInt32LE(tensors.length, 8);
  parts.push(head);
  for (const t of tensors) {
    const name = Buffer.from(t.name, 'utf-8');
    const meta = Buffer.alloc(4 + name.length + 4 + 8 * t.dims.length + 4);
    let off = 0;
    meta.writeUInt32LE(name.length, off); off += 4;
    name.copy(meta, off); off += name.length;
    meta.writeUInt32LE(t.dims.length, off); off += 4;
    for (const d of t.dims) {
      meta.writeBigUInt64LE(BigInt(d), off); off += 8;
    }
    meta.writeUInt32LE(DTYPE_F32, off);
    parts.push(meta);
    const payload = Buffer.alloc(4 * t.data.length);
    for (let i = 0; i < t.data.length; i++) payload.writeFloatLE(t.data[i], 4 * i);
    parts.push(payload);
  }
  return Buffer.concat(parts);
}

export function readGspt(buf: Buffer): Tensor[] {
  let off = 0;
  const need = (size: number) => {
    if (off + size > buf.length) {
      throw new GsptFormatError(`truncated container: need ${size} bytes`, off);
    }
  };
  need(4);
  if (buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new GsptFormatError(`bad magic '${buf.toString('ascii', 0, 4)}'`, 0);
  }
  off = 4;
  need(8);
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new GsptFormatError(`unsupported container version ${version}`, 4);
  }
  const count = buf.readUInt32LE(8);
  off = 12;
  const tensors: Tensor[] = [];
  const seen = new Set<string>();
  for (let t = 0; t < count; t++) {
    need(4);
    const nameLen = buf.readUInt32LE(off); off += 4;
    need(nameLen);
    const name = buf.toString('utf-8', off, off + nameLen);
    if (seen.has(name)) throw new GsptFormatError(`duplicate tensor name '${name}'`, off);
    seen.add(name);
    off += nameLen;
    need(4);
    const rank = buf.readUInt32LE(off); off += 4;
    need(8 * rank);
    const dims: number[] = [];
    for (let i = 0; i < rank; i++) {
      dims.push(Number(buf.readBigUInt64LE(off))); off += 8;
    }
    need(4);
    const dtype = buf.readUInt32LE(off);
    if (dtype !== DTYPE_F32) throw new GsptFormatError(`unknown dtype tag ${dtype}`, off);
    off += 4;
    const n = elementCount(dims);
    need(4 * n);
    const data = new Float32Array(n);
    for (let i = 0; i < n; i++) {
      const v = buf.readFloatLE(off + 4 * i);
      if (!Number.isFinite(v)) {
        throw new GsptFormatError(`tensor '${name}' has non-finite values`, off);
      }
      data[i] = v;
    }
    off += 4 * n;
    tensors.push({ name, dims, data });
  }
  return tensors;
}
