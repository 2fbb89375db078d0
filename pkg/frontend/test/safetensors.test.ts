import { describe, expect, it } from 'vitest';
import {
  decodeF16,
  encodeF16,
  readSafetensors,
  writeSafetensors,
  type StTensor,
} from '../src/safetensors.js';

describe('safetensors', () => {
  it('f32 round trip is bitwise', () => {
    const t: StTensor = {
      name: 'w',
      dtype: 'F32',
      shape: [2, 3],
      data: new Float32Array([0.1, -2.5, 3.75, 1e-20, -0, 1234.5]),
    };
    const [back] = readSafetensors(writeSafetensors([t]));
    expect(back.shape).toEqual([2, 3]);
    expect(Buffer.from(back.data.buffer).equals(Buffer.from(t.data.buffer))).toBe(true);
  });

  it('f16 values representable in half precision survive exactly', () => {
    const t: StTensor = {
      name: 'w',
      dtype: 'F16',
      shape: [4],
      data: new Float32Array([0.5, -1.25, 2048, 6.103515625e-5]),
    };
    const [back] = readSafetensors(writeSafetensors([t]));
    expect(Array.from(back.data)).toEqual([0.5, -1.25, 2048, 6.103515625e-5]);
  });

  it('f16 decode/encode round trips every finite bit pattern', () => {
    for (let bits = 0; bits < 0x10000; bits++) {
      const v = decodeF16(bits);
      if (!Number.isFinite(v)) continue;
      expect(encodeF16(v)).toBe(bits === 0x8000 ? 0x8000 : bits);
    }
  });

  it('rejects unsupported dtypes', () => {
    const buf = writeSafetensors([
      { name: 'w', dtype: 'F32', shape: [1], data: new Float32Array([1]) },
    ]);
    const headerLen = Number(buf.readBigUInt64LE(0));
    const header = JSON.parse(buf.toString('utf-8', 8, 8 + headerLen));
    header.w.dtype = 'BF16';
    const newHeader = Buffer.from(JSON.stringify(header), 'utf-8');
    const lenBuf = Buffer.alloc(8);
    lenBuf.writeBigUInt64LE(BigInt(newHeader.length), 0);
    const patched = Buffer.concat([lenBuf, newHeader, buf.subarray(8 + headerLen)]);
    expect(() => readSafetensors(patched)).toThrowError(/BF16/);
  });

  it('rejects inconsistent offsets and truncation', () => {
    const buf = writeSafetensors([
      { name: 'w', dtype: 'F32', shape: [4], data: new Float32Array([1, 2, 3, 4]) },
    ]);
    expect(() => readSafetensors(buf.subarray(0, buf.length - 4))).toThrowError(/past end/);
    expect(() => readSafetensors(Buffer.alloc(4))).toThrowError(/too short/);
  });
});
