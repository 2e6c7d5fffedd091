/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_screenimage_free: (a: number, b: number) => void;
export const keyRateCurve: (a: number, b: number) => [number, number, number, number];
export const keyRateThreshold: (a: number) => [number, number, number];
export const modeImage: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const phaseScreen: (a: number, b: number, c: number, d: number) => [number, number, number];
export const screenimage_rgba: (a: number) => [number, number];
export const screenimage_rms: (a: number) => number;
export const __wbindgen_export_0: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
