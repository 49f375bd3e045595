// CSID v1 container access. Byte layout is specified by the sounder package
// in docs/csid_format.md (little endian throughout); this module is the
// consumer side of that contract. A writer is included for test fixtures.

import * as fs from "node:fs";

export interface CsidHeader {
  version: number;
  carrierHz: number;
  bandwidthHz: number;
  nAnt: number;
  nSub: number;
  arrayGeometry: string;
  scenarioTag: string;
  recordCount: number;
}

export interface CsidRecord {
  timestampS: number;
  positionM: [number, number, number];
  snrDb: Float32Array; // [nAnt]
  csiRe: Float32Array; // [nAnt * nSub], antenna-major
  csiIm: Float32Array; // [nAnt * nSub]
}

const MAGIC = 0x44495343; // "CSID" little endian

export function readCsid(path: string): { header: CsidHeader; records: CsidRecord[] } {
  const buf = fs.readFileSync(path);
  if (buf.length < 44) throw new Error(`${path}: too short for a CSID header`);
  if (buf.readUInt32LE(0) !== MAGIC) throw new Error(`${path}: bad magic, not a CSID file`);
  const version = buf.readUInt32LE(4);
  if (version !== 1) throw new Error(`${path}: unsupported CSID version ${version}`);
  const carrierHz = buf.readDoubleLE(8);
  const bandwidthHz = buf.readDoubleLE(16);
  const nAnt = buf.readUInt32LE(24);
  const nSub = buf.readUInt32LE(28);
  let off = 32;
  const geoLen = buf.readUInt32LE(off);
  off += 4;
  const arrayGeometry = buf.toString("utf-8", off, off + geoLen);
  off += geoLen;
  const tagLen = buf.readUInt32LE(off);
  off += 4;
  const scenarioTag = buf.toString("utf-8", off, off + tagLen);
  off += tagLen;
  const recordCount = Number(buf.readBigUInt64LE(off));
  off += 8;

  const header: CsidHeader = {
    version, carrierHz, bandwidthHz, nAnt, nSub,
    arrayGeometry, scenarioTag, recordCount,
  };
  const recordBytes = 8 + 24 + 4 * nAnt + 8 * nAnt * nSub;
  const records: CsidRecord[] = [];
  for (let i = 0; i < recordCount; i++) {
    if (off + recordBytes > buf.length) {
      throw new Error(`${path}: corrupt body at record ${i} (file truncated)`);
    }
    const timestampS = buf.readDoubleLE(off);
    const positionM: [number, number, number] = [
      buf.readDoubleLE(off + 8), buf.readDoubleLE(off + 16), buf.readDoubleLE(off + 24),
    ];
    const snrDb = new Float32Array(nAnt);
    let p = off + 32;
    for (let a = 0; a < nAnt; a++, p += 4) snrDb[a] = buf.readFloatLE(p);
    const n = nAnt * nSub;
    const csiRe = new Float32Array(n);
    const csiIm = new Float32Array(n);
    for (let k = 0; k < n; k++, p += 8) {
      csiRe[k] = buf.readFloatLE(p);
      csiIm[k] = buf.readFloatLE(p + 4);
    }
    records.push({ timestampS, positionM, snrDb, csiRe, csiIm });
    off += recordBytes;
  }
  return { header, records };
}

export function writeCsid(
  path: string,
  header: Omit<CsidHeader, "recordCount" | "version">,
  records: CsidRecord[],
): void {
  const geo = Buffer.from(header.arrayGeometry, "utf-8");
  const tag = Buffer.from(header.scenarioTag, "utf-8");
  const recordBytes = 8 + 24 + 4 * header.nAnt + 8 * header.nAnt * header.nSub;
  const buf = Buffer.alloc(48 + geo.length + tag.length + records.length * recordBytes);
  buf.writeUInt32LE(MAGIC, 0);
  buf.writeUInt32LE(1, 4);
  buf.writeDoubleLE(header.carrierHz, 8);
  buf.writeDoubleLE(header.bandwidthHz, 16);
  buf.writeUInt32LE(header.nAnt, 24);
  buf.writeUInt32LE(header.nSub, 28);
  let off = 32;
  buf.writeUInt32LE(geo.length, off);
  off += 4;
  geo.copy(buf, off);
  off += geo.length;
  buf.writeUInt32LE(tag.length, off);
  off += 4;
  tag.copy(buf, off);
  off += tag.length;
  buf.writeBigUInt64LE(BigInt(records.length), off);
  off += 8;
  for (const rec of records) {
    if (rec.snrDb.length !== header.nAnt || rec.csiRe.length !== header.nAnt * header.nSub) {
      throw new Error("record dimensions do not match header");
    }
    buf.writeDoubleLE(rec.timestampS, off);
    buf.writeDoubleLE(rec.positionM[0], off + 8);
    buf.writeDoubleLE(rec.positionM[1], off + 16);
    buf.writeDoubleLE(rec.positionM[2], off + 24);
    let p = off + 32;
    for (let a = 0; a < header.nAnt; a++, p += 4) buf.writeFloatLE(rec.snrDb[a], p);
    for (let k = 0; k < header.nAnt * header.nSub; k++, p += 8) {
      buf.writeFloatLE(rec.csiRe[k], p);
      buf.writeFloatLE(rec.csiIm[k], p + 4);
    }
    off += recordBytes;
  }
  fs.writeFileSync(path, buf);
}
