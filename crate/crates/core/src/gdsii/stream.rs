use super::{check_name, decode_real8, encode_real8, Element, GdsError, GdsLibrary, GdsStructure, Timestamps};

// record types
const HEADER: u8 = 0x00;
const BGNLIB: u8 = 0x01;
const LIBNAME: u8 = 0x02;
const UNITS: u8 = 0x03;
const ENDLIB: u8 = 0x04;
const BGNSTR: u8 = 0x05;
const STRNAME: u8 = 0x06;
const ENDSTR: u8 = 0x07;
const BOUNDARY: u8 = 0x08;
const PATH: u8 = 0x09;
const SREF: u8 = 0x0A;
const LAYER: u8 = 0x0D;
const DATATYPE: u8 = 0x0E;
const WIDTH: u8 = 0x0F;
const XY: u8 = 0x10;
const ENDEL: u8 = 0x11;
const SNAME: u8 = 0x12;
const STRANS: u8 = 0x1A;
const ANGLE: u8 = 0x1C;
const PATHTYPE: u8 = 0x21;

// data types
const NONE: u8 = 0;
const BITS: u8 = 1;
const I2: u8 = 2;
const I4: u8 = 3;
const R8: u8 = 5;
const ASCII: u8 = 6;

const VERSION: i16 = 600;
const STRANS_REFLECT: u16 = 0x8000;
const MAX_RECORD: usize = 0xFFFF;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn record(&mut self, rtype: u8, dtype: u8, data: &[u8]) -> Result<(), ()> {
        let len = data.len() + 4;
        if len > MAX_RECORD {
            return Err(());
        }
        self.buf.extend_from_slice(&(len as u16).to_be_bytes());
        self.buf.push(rtype);
        self.buf.push(dtype);
        self.buf.extend_from_slice(data);
        Ok(())
    }

    fn empty(&mut self, rtype: u8) {
        self.record(rtype, NONE, &[]).expect("empty record fits");
    }

    fn i2(&mut self, rtype: u8, vals: &[i16]) {
        let data: Vec<u8> = vals.iter().flat_map(|v| v.to_be_bytes()).collect();
        self.record(rtype, I2, &data).expect("short record fits");
    }

    fn ascii(&mut self, rtype: u8, s: &str) {
        let mut data = s.as_bytes().to_vec();
        if data.len() % 2 == 1 {
            data.push(0);
        }
        self.record(rtype, ASCII, &data).expect("names are checked for length");
    }

    fn xy(&mut self, pts: &[(i32, i32)], owner: &str) -> Result<(), GdsError> {
        let data: Vec<u8> = pts.iter().flat_map(|&(x, y)| x.to_be_bytes().into_iter().chain(y.to_be_bytes())).collect();
        self.record(XY, I4, &data).map_err(|_| GdsError::RecordTooLong(owner.into()))
    }
}

/// Serialises `lib`. Output depends only on the library value.
pub fn write_gds(lib: &GdsLibrary) -> Result<Vec<u8>, GdsError> {
    let mut w = Writer { buf: Vec::new() };
    w.i2(HEADER, &[VERSION]);
    w.i2(BGNLIB, &lib.timestamps);
    w.ascii(LIBNAME, &lib.name);
    let mut units = Vec::with_capacity(16);
    units.extend(encode_real8(lib.db_in_user)?);
    units.extend(encode_real8(lib.db_unit)?);
    w.record(UNITS, R8, &units).expect("fixed size");
    let mut seen = std::collections::HashSet::new();
    for s in &lib.structures {
        check_name(&s.name)?;
        if !seen.insert(s.name.as_str()) {
            return Err(GdsError::DuplicateStructure(s.name.clone()));
        }
        w.i2(BGNSTR, &s.timestamps);
        w.ascii(STRNAME, &s.name);
        for e in &s.elements {
            match e {
                Element::Boundary { layer, datatype, xy } => {
                    if xy.len() < 4 || xy.first() != xy.last() {
                        return Err(GdsError::OpenBoundary(s.name.clone()));
                    }
                    w.empty(BOUNDARY);
                    w.i2(LAYER, &[*layer]);
                    w.i2(DATATYPE, &[*datatype]);
                    w.xy(xy, &s.name)?;
                }
                Element::Path {
                    layer,
                    datatype,
                    pathtype,
                    width,
                    xy,
                } => {
                    w.empty(PATH);
                    w.i2(LAYER, &[*layer]);
                    w.i2(DATATYPE, &[*datatype]);
                    w.i2(PATHTYPE, &[*pathtype]);
                    w.record(WIDTH, I4, &width.to_be_bytes()).expect("fixed size");
                    w.xy(xy, &s.name)?;
                }
                Element::SRef {
                    sname,
                    origin,
                    angle,
                    reflect,
                } => {
                    check_name(sname)?;
                    w.empty(SREF);
                    w.ascii(SNAME, sname);
                    if *reflect || *angle != 0.0 {
                        let flags: u16 = if *reflect { STRANS_REFLECT } else { 0 };
                        w.record(STRANS, BITS, &flags.to_be_bytes()).expect("fixed size");
                        if *angle != 0.0 {
                            w.record(ANGLE, R8, &encode_real8(*angle)?).expect("fixed size");
                        }
                    }
                    w.xy(&[*origin], &s.name)?;
                }
            }
            w.empty(ENDEL);
        }
        w.empty(ENDSTR);
    }
    w.empty(ENDLIB);
    Ok(w.buf)
}

struct Record<'a> {
    offset: usize,
    rtype: u8,
    dtype: u8,
    data: &'a [u8],
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<Record<'a>, GdsError> {
        let offset = self.pos;
        let bad = GdsError::MalformedRecord { offset };
        if offset + 4 > self.bytes.len() {
            return Err(bad);
        }
        let len = u16::from_be_bytes([self.bytes[offset], self.bytes[offset + 1]]) as usize;
        if len < 4 || len % 2 == 1 || offset + len > self.bytes.len() {
            return Err(bad);
        }
        self.pos += len;
        Ok(Record {
            offset,
            rtype: self.bytes[offset + 2],
            dtype: self.bytes[offset + 3],
            data: &self.bytes[offset + 4..offset + len],
        })
    }

    /// Next record, which must have type `rtype` and data type `dtype`.
    fn expect(&mut self, rtype: u8, dtype: u8) -> Result<Record<'a>, GdsError> {
        let r = self.next()?;
        if r.rtype != rtype || r.dtype != dtype {
            return Err(GdsError::MalformedRecord { offset: r.offset });
        }
        Ok(r)
    }
}

fn i2s(r: &Record) -> Result<Vec<i16>, GdsError> {
    if !r.data.len().is_multiple_of(2) {
        return Err(GdsError::MalformedRecord { offset: r.offset });
    }
    Ok(r.data.chunks_exact(2).map(|c| i16::from_be_bytes([c[0], c[1]])).collect())
}

fn one_i2(r: &Record) -> Result<i16, GdsError> {
    match i2s(r)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(GdsError::MalformedRecord { offset: r.offset }),
    }
}

fn timestamps(r: &Record) -> Result<Timestamps, GdsError> {
    i2s(r)?.try_into().map_err(|_| GdsError::MalformedRecord { offset: r.offset })
}

fn ascii(r: &Record) -> Result<String, GdsError> {
    let end = r.data.iter().position(|&b| b == 0).unwrap_or(r.data.len());
    String::from_utf8(r.data[..end].to_vec()).map_err(|_| GdsError::MalformedRecord { offset: r.offset })
}

fn real8s(r: &Record) -> Result<Vec<f64>, GdsError> {
    if !r.data.len().is_multiple_of(8) {
        return Err(GdsError::MalformedRecord { offset: r.offset });
    }
    Ok(r.data
        .chunks_exact(8)
        .map(|c| decode_real8(c.try_into().expect("chunk of 8")))
        .collect())
}

fn points(r: &Record) -> Result<Vec<(i32, i32)>, GdsError> {
    if !r.data.len().is_multiple_of(8) {
        return Err(GdsError::MalformedRecord { offset: r.offset });
    }
    Ok(r.data
        .chunks_exact(8)
        .map(|c| {
            (
                i32::from_be_bytes([c[0], c[1], c[2], c[3]]),
                i32::from_be_bytes([c[4], c[5], c[6], c[7]]),
            )
        })
        .collect())
}

fn unsupported(r: &Record) -> GdsError {
    GdsError::UnsupportedRecord {
        rtype: r.rtype,
        offset: r.offset,
    }
}

fn read_element(rd: &mut Reader, head: &Record) -> Result<Element, GdsError> {
    let e = match head.rtype {
        BOUNDARY | PATH => {
            let layer = one_i2(&rd.expect(LAYER, I2)?)?;
            let datatype = one_i2(&rd.expect(DATATYPE, I2)?)?;
            let mut pathtype = 0;
            let mut width = 0;
            let mut r = rd.next()?;
            if head.rtype == PATH {
                if r.rtype == PATHTYPE && r.dtype == I2 {
                    pathtype = one_i2(&r)?;
                    r = rd.next()?;
                }
                if r.rtype == WIDTH && r.dtype == I4 {
                    width = match points_i4(&r)?.as_slice() {
                        [v] => *v,
                        _ => return Err(GdsError::MalformedRecord { offset: r.offset }),
                    };
                    r = rd.next()?;
                }
            }
            if r.rtype != XY || r.dtype != I4 {
                return Err(GdsError::MalformedRecord { offset: r.offset });
            }
            let xy = points(&r)?;
            if head.rtype == BOUNDARY {
                Element::Boundary { layer, datatype, xy }
            } else {
                Element::Path {
                    layer,
                    datatype,
                    pathtype,
                    width,
                    xy,
                }
            }
        }
        SREF => {
            let sname = ascii(&rd.expect(SNAME, ASCII)?)?;
            let mut reflect = false;
            let mut angle = 0.0;
            let mut r = rd.next()?;
            if r.rtype == STRANS && r.dtype == BITS {
                if r.data.len() != 2 {
                    return Err(GdsError::MalformedRecord { offset: r.offset });
                }
                reflect = u16::from_be_bytes([r.data[0], r.data[1]]) & STRANS_REFLECT != 0;
                r = rd.next()?;
                if r.rtype == ANGLE && r.dtype == R8 {
                    angle = match real8s(&r)?.as_slice() {
                        [a] => *a,
                        _ => return Err(GdsError::MalformedRecord { offset: r.offset }),
                    };
                    r = rd.next()?;
                }
            }
            if r.rtype != XY || r.dtype != I4 {
                return Err(GdsError::MalformedRecord { offset: r.offset });
            }
            let origin = match points(&r)?.as_slice() {
                [p] => *p,
                _ => return Err(GdsError::MalformedRecord { offset: r.offset }),
            };
            Element::SRef {
                sname,
                origin,
                angle,
                reflect,
            }
        }
        _ => return Err(unsupported(head)),
    };
    rd.expect(ENDEL, NONE)?;
    Ok(e)
}

fn points_i4(r: &Record) -> Result<Vec<i32>, GdsError> {
    if !r.data.len().is_multiple_of(4) {
        return Err(GdsError::MalformedRecord { offset: r.offset });
    }
    Ok(r.data.chunks_exact(4).map(|c| i32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// Parses a stream in the record subset produced by [`write_gds`].
pub fn read_gds(bytes: &[u8]) -> Result<GdsLibrary, GdsError> {
    let mut rd = Reader { bytes, pos: 0 };
    rd.expect(HEADER, I2)?;
    let ts = timestamps(&rd.expect(BGNLIB, I2)?)?;
    let name = ascii(&rd.expect(LIBNAME, ASCII)?)?;
    let u = rd.expect(UNITS, R8)?;
    let units = real8s(&u)?;
    let [db_in_user, db_unit] = units[..] else {
        return Err(GdsError::MalformedRecord { offset: u.offset });
    };
    let mut lib = GdsLibrary {
        name,
        db_in_user,
        db_unit,
        timestamps: ts,
        structures: Vec::new(),
    };
    loop {
        let r = rd.next()?;
        match (r.rtype, r.dtype) {
            (ENDLIB, NONE) => break,
            (BGNSTR, I2) => {
                let mut s = GdsStructure::new(ascii(&rd.expect(STRNAME, ASCII)?)?);
                s.timestamps = timestamps(&r)?;
                loop {
                    let e = rd.next()?;
                    match e.rtype {
                        ENDSTR => break,
                        BOUNDARY | PATH | SREF if e.dtype == NONE => s.elements.push(read_element(&mut rd, &e)?),
                        BOUNDARY | PATH | SREF => return Err(GdsError::MalformedRecord { offset: e.offset }),
                        _ => return Err(unsupported(&e)),
                    }
                }
                lib.structures.push(s);
            }
            (BGNSTR, _) => return Err(GdsError::MalformedRecord { offset: r.offset }),
            _ => return Err(unsupported(&r)),
        }
    }
    Ok(lib)
}
