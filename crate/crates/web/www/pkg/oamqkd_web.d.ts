/* tslint:disable */
/* eslint-disable */
export function modeImage(l: number, z_km: number, w0: number, size: number): Uint8Array;
export function phaseScreen(r0: number, seed: number, size: number, delta: number): ScreenImage;
export function keyRateCurve(d: number, samples: number): Float64Array;
export function keyRateThreshold(d: number): number;
export class ScreenImage {
  private constructor();
  free(): void;
  readonly rms: number;
  readonly rgba: Uint8Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
  readonly memory: WebAssembly.Memory;
  readonly __wbg_screenimage_free: (a: number, b: number) => void;
  readonly keyRateCurve: (a: number, b: number) => [number, number, number, number];
  readonly keyRateThreshold: (a: number) => [number, number, number];
  readonly modeImage: (a: number, b: number, c: number, d: number) => [number, number, number, number];
  readonly phaseScreen: (a: number, b: number, c: number, d: number) => [number, number, number];
  readonly screenimage_rgba: (a: number) => [number, number];
  readonly screenimage_rms: (a: number) => number;
  readonly __wbindgen_export_0: WebAssembly.Table;
  readonly __externref_table_dealloc: (a: number) => void;
  readonly __wbindgen_free: (a: number, b: number, c: number) => void;
  readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;
/**
* Instantiates the given `module`, which can either be bytes or
* a precompiled `WebAssembly.Module`.
*
* @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
*
* @returns {InitOutput}
*/
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
* If `module_or_path` is {RequestInfo} or {URL}, makes a request and
* for everything else, calls `WebAssembly.instantiate` directly.
*
* @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
*
* @returns {Promise<InitOutput>}
*/
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
