import { describe, expect, it } from 'vitest';
import { GsptFormatError, readGspt, writeGspt, type Tensor } from '../src/gspt.js';
import { mulberry32 } from './util.js';

function randomTensors(count: number, seed: number): Tensor[] {
  const rand = mulberry32(seed);
  return Array.from({ length: count }, (_, i) => {
    const rows = 1 + Math.floor(rand() * 8);
    const cols = 1 + Math.floor(rand() * 8);
    const data = new Float32Array(rows * cols);
    for (let j = 0; j < data.length; j++) data[j] = 2 * rand() - 1;
    return { name: `t${i}`, dims: [rows, cols], data };
  });
}

describe('gspt container', () => {
  it('empty container is exactly the 12-byte header', () => {
    const buf = writeGspt([]);
    expect(buf.length).toBe(12);
    expect(buf.toString('ascii', 0, 4)).toBe('GSPT');
    expect(buf.readUInt32LE(4)).toBe(1);
    expect(buf.readUInt32LE(8)).toBe(0);
    expect(readGspt(buf)).toEqual([]);
  });

  it('round trip preserves everything bitwise', () => {
    const tensors = randomTensors(20, 1);
    const buf = writeGspt(tensors);
    const back = readGspt(buf);
    expect(back.map((t) => t.name)).toEqual(tensors.map((t) => t.name));
    for (let i = 0; i < tensors.length; i++) {
      expect(back[i].dims).toEqual(tensors[i].dims);
      expect(Buffer.from(back[i].data.buffer).equals(Buffer.from(tensors[i].data.buffer))).toBe(true);
    }
    expect(writeGspt(back).equals(buf)).toBe(true);
  });

  it('rejects bad magic at offset 0', () => {
    const buf = writeGspt(randomTensors(1, 2));
    buf.write('NOPE', 0, 'ascii');
    expect(() => readGspt(buf)).toThrowError(GsptFormatError);
    try {
      readGspt(buf);
    } catch (e) {
      expect((e as GsptFormatError).offset).toBe(0);
    }
  });

  it('rejects truncation and unknown dtype', () => {
    const buf = writeGspt(randomTensors(1, 3));
    expect(() => readGspt(buf.subarray(0, buf.length - 2))).toThrowError(/truncated/);
    const bad = Buffer.from(buf);
    // dtype tag sits right before the payload of the only tensor
    const t = readGspt(buf)[0];
    const dtypeOff = buf.length - 4 * t.data.length - 4;
    bad.writeUInt32LE(7, dtypeOff);
    expect(() => readGspt(bad)).toThrowError(/dtype/);
  });

  it('rejects duplicate names on write and read', () => {
    const [t] = randomTensors(1, 4);
    expect(() => writeGspt([t, { ...t }])).toThrowError(/duplicate/);
  });
});
