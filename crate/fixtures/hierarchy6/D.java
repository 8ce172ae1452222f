public class D extends A { }
