/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_count: (a: number) => number;
export const demo_gridsearch: (a: number) => [number, number, number, number];
export const demo_height: (a: number) => number;
export const demo_image: (a: number, b: number) => [number, number, number, number];
export const demo_mask: (a: number, b: number) => [number, number, number, number];
export const demo_new: (a: number, b: bigint) => [number, number, number];
export const demo_segment: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_segmentation: (a: number) => [number, number];
export const demo_train: (a: number, b: number, c: bigint) => [number, number, number, number];
export const demo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
