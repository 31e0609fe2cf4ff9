/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fight_free: (a: number, b: number) => void;
export const class_names: () => [number, number];
export const fight_advance: (a: number) => [number, number, number, number];
export const fight_awaiting_choice: (a: number) => number;
export const fight_choose: (a: number, b: number) => [number, number, number, number];
export const fight_entities_json: (a: number) => [number, number];
export const fight_height: (a: number) => number;
export const fight_is_over: (a: number) => number;
export const fight_load_checkpoint: (a: number, b: number, c: number) => [number, number];
export const fight_map_name: (a: number) => [number, number];
export const fight_menu: (a: number) => [number, number];
export const fight_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: bigint) => [number, number, number];
export const fight_outcome: (a: number) => [number, number];
export const fight_prompt: (a: number) => [number, number];
export const fight_reachable: (a: number, b: number, c: number, d: number) => [number, number];
export const fight_round: (a: number) => number;
export const fight_run: (a: number, b: number) => [number, number, number, number];
export const fight_terrain: (a: number) => [number, number];
export const fight_visibility: (a: number, b: number, c: number) => [number, number];
export const fight_width: (a: number) => number;
export const map_names: () => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
