/**
 * Writer for the detector's weight container: little-endian, magic
 * "CGHW", version u32, tensor count u32; per tensor a u8-length UTF-8
 * name, dtype u8 (0 = f32), rank u8, u32 dims, then raw data; the file
 * ends with a CRC32 of everything before it. Tensor names and order match
 * the detector's writer so a load/re-save round trip over there is
 * byte-identical.
 */

import { ExtractedWeights, CONV_FILTERS, N_COEFFICIENTS } from './model.js';

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(buf: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < buf.length; i++) {
    crc = CRC_TABLE[(crc ^ buf[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

class ByteWriter {
  private chunks: Buffer[] = [];

  ascii(s: string): void {
    this.chunks.push(Buffer.from(s, 'ascii'));
  }

  u8(v: number): void {
    const b = Buffer.alloc(1);
    b.writeUInt8(v);
    this.chunks.push(b);
  }

  u32(v: number): void {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(v >>> 0);
    this.chunks.push(b);
  }

  f32Array(values: ArrayLike<number>): void {
    const b = Buffer.alloc(values.length * 4);
    for (let i = 0; i < values.length; i++) b.writeFloatLE(values[i], i * 4);
    this.chunks.push(b);
  }

  concat(): Buffer {
    return Buffer.concat(this.chunks);
  }
}

function tensor(w: ByteWriter, name: string, dims: number[], data: ArrayLike<number>): void {
  const size = dims.reduce((a, b) => a * b, 1);
  if (data.length !== size) {
    throw new Error(`tensor ${name}: ${data.length} values for shape [${dims}]`);
  }
  const nameBytes = Buffer.from(name, 'utf-8');
  w.u8(nameBytes.length);
  w.ascii(name);
  w.u8(0); // dtype f32
  w.u8(dims.length);
  for (const d of dims) w.u32(d);
  w.f32Array(data);
}

export function encodeWeights(weights: ExtractedWeights): Buffer {
  const w = new ByteWriter();
  w.ascii('CGHW');
  w.u32(1); // format version
  w.u32(14); // tensor count

  let inChannels = 1;
  CONV_FILTERS.forEach((filters, i) => {
    tensor(w, `conv${i + 1}.kernel`, [3, 3, inChannels, filters], weights.convKernels[i]);
    tensor(w, `conv${i + 1}.bias`, [filters], weights.convBiases[i]);
    inChannels = filters;
  });
  tensor(w, 'bn.gamma', [40], weights.bnGamma);
  tensor(w, 'bn.beta', [40], weights.bnBeta);
  tensor(w, 'bn.moving_mean', [40], weights.bnMovingMean);
  tensor(w, 'bn.moving_var', [40], weights.bnMovingVar);
  tensor(w, 'bn.epsilon', [], [weights.bnEpsilon]);
  tensor(w, 'dense.kernel', [40, 1], weights.denseKernel);
  tensor(w, 'dense.bias', [1], weights.denseBias);
  tensor(w, 'meta.input_shape', [3], [N_COEFFICIENTS, weights.nFrames, 1]);

  const body = w.concat();
  const trailer = Buffer.alloc(4);
  trailer.writeUInt32LE(crc32(body));
  return Buffer.concat([body, trailer]);
}
